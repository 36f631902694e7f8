"""Problem data types and sampled estimation of essential suprema/infima.

Norms over ``[t0, inf)`` are approximated on a finite window.  The sampling
grid anchors at the window start with spacing ``step/2`` (so it contains both
the step-aligned nodes and their midpoints); halving the step refines the grid
to a superset, which makes the sampled sup monotone under refinement.
"""

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np

from . import expr as ex

__all__ = [
    "Sampling", "ScalarFn", "LagFn", "Term", "NeutralEquation", "InitialData",
    "NormEstimate", "Violation", "ValidationError",
    "estimate_sup", "estimate_inf", "norm_abs_sup",
    "expr_extrema", "expr_sup", "expr_inf", "expr_abs_sup", "quotient_abs_sup",
    "validate", "check_initial_match", "default_sampling",
]

#: sampled lower bounds must clear zero by this much to count as positive
POSITIVITY_MARGIN = 1e-12


@dataclass(frozen=True)
class Sampling:
    """A finite estimation window ``[t_lo, t_hi]`` with nominal spacing ``step``."""

    t_lo: float
    t_hi: float
    step: float

    def __post_init__(self):
        if not (self.t_hi > self.t_lo):
            raise ValueError("degenerate sampling window")
        if not (self.step > 0.0):
            raise ValueError("sampling step must be positive")

    @property
    def window(self):
        return (self.t_lo, self.t_hi)

    def grid(self):
        return _grid(self.t_lo, self.t_hi, self.step)

    def refined(self, factor=2):
        return Sampling(self.t_lo, self.t_hi, self.step / factor)


@lru_cache(maxsize=256)
def _grid(lo, hi, step):
    half = 0.5 * step
    count = int(math.floor((hi - lo) / half + 1e-9)) + 1
    ts = lo + np.arange(count, dtype=np.float64) * half
    ts.setflags(write=False)
    return ts


@dataclass(frozen=True)
class ScalarFn:
    """An evaluable function of time with optional declared value bounds."""

    body: ex.Expr
    declared_sup: Optional[float] = None
    declared_inf: Optional[float] = None

    @classmethod
    def from_source(cls, source, sup=None, inf=None):
        return cls(ex.parse(source), sup, inf)

    @classmethod
    def constant(cls, value):
        value = float(value)
        return cls(ex.num(value), value, value)

    def __call__(self, t):
        return ex.evaluate(self.body, t)

    def is_constant(self):
        return ex.is_time_free(self.body)

    def constant_value(self):
        return ex.evaluate(self.body, 0.0)


@dataclass(frozen=True)
class LagFn:
    """A time lag ``d(t) >= 0``; the delayed argument is ``t - d(t)``.

    ``lag_sup``/``lag_inf`` bound the lag on the relevant time range; they are
    data (declared or pre-sampled), not recomputed per call.
    """

    body: ex.Expr
    lag_sup: float
    lag_inf: float

    @classmethod
    def from_source(cls, source, sup=None, inf=None, sampling=None):
        body = ex.parse(source)
        return cls.from_expr(body, sup, inf, sampling)

    @classmethod
    def from_expr(cls, body, sup=None, inf=None, sampling=None):
        if sup is None or inf is None:
            if ex.is_time_free(body):
                v = ex.evaluate(body, 0.0)
                sup = v if sup is None else sup
                inf = v if inf is None else inf
            else:
                if sampling is None:
                    raise ValueError(
                        "lag bounds not declared and no sampling window given")
                vmin, _, vmax, _ = expr_extrema(body, sampling)
                sup = vmax if sup is None else sup
                inf = vmin if inf is None else inf
        return cls(body, float(sup), float(inf))

    @classmethod
    def constant(cls, value):
        value = float(value)
        return cls(ex.num(value), value, value)

    def __call__(self, t):
        return ex.evaluate(self.body, t)


@dataclass(frozen=True)
class Term:
    """One delayed state term: coefficient ``b`` applied at ``t - lag(t)``."""

    b: ScalarFn
    lag: LagFn


@dataclass(frozen=True)
class NeutralEquation:
    """dx(t) - a(t) dx(t - g_lag(t)) = -sum_k b_k(t) x(t - h_lag_k(t)) + f(t)."""

    t0: float
    a: ScalarFn
    g_lag: LagFn
    terms: tuple

    def __post_init__(self):
        if len(self.terms) < 1:
            raise ValueError("at least one delayed term is required")
        object.__setattr__(self, "terms", tuple(self.terms))

    @property
    def m(self):
        return len(self.terms)


@dataclass(frozen=True)
class InitialData:
    """History data: x(t) = phi(t) for t <= t0, dx(t) = psi(t) for t < t0.

    ``x0`` is the start value x(t0).  For ordinary initial value problems
    ``x0 == phi(t0)``; the fundamental-solution problem deliberately breaks
    that equality (unit start on zero history), so it is not enforced here.
    """

    phi: ScalarFn
    psi: ScalarFn
    x0: float

    @classmethod
    def zero(cls):
        z = ScalarFn.constant(0.0)
        return cls(z, z, 0.0)


@dataclass(frozen=True)
class NormEstimate:
    """An estimated extremum, tagged with how it was obtained."""

    value: float
    method: str  # "declared" | "sampled"
    window: tuple
    step: float


@dataclass(frozen=True)
class Violation:
    """One failed data check; ``t`` is a witnessing time when grid-derived."""

    fieldname: str
    t: Optional[float]
    value: float
    message: str

    def __str__(self):
        where = f" at t={self.t:.6g}" if self.t is not None else ""
        return f"{self.fieldname}: {self.message}{where} (value {self.value:.6g})"


class ValidationError(ValueError):
    def __init__(self, violations):
        super().__init__(
            "invalid equation data: " + "; ".join(str(v) for v in violations))
        self.violations = list(violations)


def expr_extrema(e, sampling):
    """Grid extrema of an expression: ``(min, argmin_t, max, argmax_t)``."""
    if ex.is_time_free(e):
        v = ex.evaluate(e, sampling.t_lo)
        return v, sampling.t_lo, v, sampling.t_lo
    ts = sampling.grid()
    values = ex.evaluate_grid(e, ts)
    imin = int(np.argmin(values))
    imax = int(np.argmax(values))
    return float(values[imin]), float(ts[imin]), float(values[imax]), float(ts[imax])


def expr_sup(e, sampling):
    return expr_extrema(e, sampling)[2]


def expr_inf(e, sampling):
    return expr_extrema(e, sampling)[0]


def expr_abs_sup(e, sampling):
    vmin, _, vmax, _ = expr_extrema(e, sampling)
    return max(abs(vmin), abs(vmax))


def quotient_abs_sup(num_expr, den_expr, sampling):
    """Pointwise sup of |num/den| on the grid (tighter than a norm ratio)."""
    return expr_abs_sup(ex.div(num_expr, den_expr), sampling)


def estimate_sup(fn, sampling):
    """Signed supremum estimate of a scalar function.

    A declared bound wins; a time-free body is exact; otherwise the grid
    maximum is returned and tagged with the window and step used.
    """
    if fn.declared_sup is not None:
        return NormEstimate(float(fn.declared_sup), "declared",
                            sampling.window, sampling.step)
    if ex.is_time_free(fn.body):
        return NormEstimate(fn.constant_value(), "declared",
                            sampling.window, sampling.step)
    value = expr_sup(fn.body, sampling)
    return NormEstimate(value, "sampled", sampling.window, sampling.step)


def estimate_inf(fn, sampling):
    """Signed infimum estimate; mirrors :func:`estimate_sup`."""
    if fn.declared_inf is not None:
        return NormEstimate(float(fn.declared_inf), "declared",
                            sampling.window, sampling.step)
    if ex.is_time_free(fn.body):
        return NormEstimate(fn.constant_value(), "declared",
                            sampling.window, sampling.step)
    value = expr_inf(fn.body, sampling)
    return NormEstimate(value, "sampled", sampling.window, sampling.step)


def norm_abs_sup(fn, sampling):
    """Essential-sup surrogate of |fn| on the window."""
    if fn.declared_sup is not None and fn.declared_inf is not None:
        value = max(abs(fn.declared_sup), abs(fn.declared_inf))
        return NormEstimate(value, "declared", sampling.window, sampling.step)
    if ex.is_time_free(fn.body):
        return NormEstimate(abs(fn.constant_value()), "declared",
                            sampling.window, sampling.step)
    value = expr_abs_sup(fn.body, sampling)
    return NormEstimate(value, "sampled", sampling.window, sampling.step)


def default_sampling(eq):
    """Window covering several lag/coefficient periods: 20 * max(lags, 2*pi)."""
    width = 20.0 * max(eq.g_lag.lag_sup, *(t.lag.lag_sup for t in eq.terms),
                       2.0 * math.pi)
    return Sampling(eq.t0, eq.t0 + width, 1e-3 * width)


def _check_bounds(fieldname, fn, sampling, tol, out):
    if fn.declared_sup is None and fn.declared_inf is None:
        return
    vmin, tmin, vmax, tmax = expr_extrema(fn.body, sampling)
    if fn.declared_sup is not None and vmax > fn.declared_sup + tol:
        out.append(Violation(fieldname, tmax, vmax,
                             f"sampled value exceeds declared sup {fn.declared_sup:.6g}"))
    if fn.declared_inf is not None and vmin < fn.declared_inf - tol:
        out.append(Violation(fieldname, tmin, vmin,
                             f"sampled value below declared inf {fn.declared_inf:.6g}"))


def _check_lag(fieldname, lag, sampling, tol, out):
    if lag.lag_inf < 0.0:
        out.append(Violation(fieldname, None, lag.lag_inf, "negative lag bound"))
    if lag.lag_sup < lag.lag_inf:
        out.append(Violation(fieldname, None, lag.lag_sup,
                             "lag sup below lag inf"))
    vmin, tmin, vmax, tmax = expr_extrema(lag.body, sampling)
    if vmin < -tol:
        out.append(Violation(fieldname, tmin, vmin, "negative lag"))
    if vmin < lag.lag_inf - tol:
        out.append(Violation(fieldname, tmin, vmin,
                             f"lag falls below declared inf {lag.lag_inf:.6g}"))
    if vmax > lag.lag_sup + tol:
        out.append(Violation(fieldname, tmax, vmax,
                             f"lag exceeds declared sup {lag.lag_sup:.6g}"))


def validate(eq, sampling=None, tol=1e-9):
    """Check the standing assumptions; returns a list of violations.

    Empty iff sup|a| < 1, every lag stays inside its declared bounds on the
    grid and no lag bound is negative.  Violations are data, not errors.
    """
    if sampling is None:
        sampling = default_sampling(eq)
    out = []
    a_norm = norm_abs_sup(eq.a, sampling)
    if not a_norm.value < 1.0:
        out.append(Violation("a", None, a_norm.value,
                             "sup|a| >= 1 (neutral coefficient too large)"))
    _check_bounds("a", eq.a, sampling, tol, out)
    _check_lag("g_lag", eq.g_lag, sampling, tol, out)
    for k, term in enumerate(eq.terms):
        _check_bounds(f"terms[{k}].b", term.b, sampling, tol, out)
        _check_lag(f"terms[{k}].h_lag", term.lag, sampling, tol, out)
    return out


def check_initial_match(init, t0, tol=1e-9):
    """Verify x0 == phi(t0) for an ordinary initial value problem."""
    phi0 = init.phi(t0)
    if abs(phi0 - init.x0) > tol * max(1.0, abs(init.x0)):
        return [Violation("initial.x0", t0, init.x0,
                          f"x0 differs from phi(t0) = {phi0:.6g}")]
    return []
