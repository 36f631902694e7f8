"""Exponential envelope certificates.

A rate ``lam`` is certifiable when the margin function

    p(t) = sum_k e^{lam*lag_k(t)} b_k(t) + lam*a(t)*e^{lam*glag(t)} - lam

stays positive, the amplified neutral norm ``e^{lam*sigma} sup|a|`` stays
below one, and the contraction factor M1 built from windowed norms stays
below one.  The certificate then bounds every solution by

    |x(t)| <= C e^{-lam (t - t0)} + gain * sup|f|

with C assembled from the initial data and M0 = 1/(1 - M1).
"""

import math
from dataclasses import dataclass
from functools import reduce
from typing import Optional

from . import expr as ex
from .criteria import GeneralEquation, GeneralTerm
from .model import (
    Sampling,
    ScalarFn,
    default_sampling,
    expr_abs_sup,
    expr_inf,
    norm_abs_sup,
    quotient_abs_sup,
)

__all__ = [
    "EnvelopeCertificate", "Feasibility", "InfeasibleRateError",
    "decay_margin_expr", "decay_margin_inf", "contraction_factor",
    "feasibility", "optimize_rate", "rate_shifted_equation", "certificate",
]

#: number of candidate rates scanned before bisection
SCAN_POINTS = 200


class InfeasibleRateError(ValueError):
    """A certificate precondition failed; ``clause`` names the first one."""

    def __init__(self, clause, detail):
        super().__init__(f"rate not certifiable: {clause} ({detail})")
        self.clause = clause


@dataclass(frozen=True)
class Feasibility:
    feasible: bool
    failing: Optional[str]    # "margin" | "neutral-gain" | "contraction" | "evaluation"
    margin: float             # inf p
    neutral_gain: float       # e^{lam*sigma} * sup|a|
    contraction: float        # M1 (NaN when not reached)

    def __bool__(self):
        return self.feasible


@dataclass(frozen=True)
class EnvelopeCertificate:
    """Proof data for |x(t)| <= C e^{-lam (t-t0)} + gain * sup|f|."""

    t0: float
    decay_rate: float
    margin: float
    contraction: float
    kernel_bound: float       # M0 = 1/(1 - M1)
    init_constant: float      # C
    forcing_gain: float
    components: dict          # bracket summands building C (before the M0 factor)

    def bound_at(self, t, f_sup=0.0):
        """Envelope value at time(s) ``t`` (works on arrays)."""
        import numpy as np

        dt = np.asarray(t, dtype=float) - self.t0
        return (self.init_constant * np.exp(-self.decay_rate * dt)
                + self.forcing_gain * f_sup)


def decay_margin_expr(eq, rate):
    """The margin function p as a composed expression."""
    r = ex.num(rate)
    parts = [ex.mul(ex.call("exp", ex.mul(r, t.lag.body)), t.b.body)
             for t in eq.terms]
    neutral = ex.mul(r, ex.mul(eq.a.body,
                               ex.call("exp", ex.mul(r, eq.g_lag.body))))
    return ex.sub(ex.add(reduce(ex.add, parts), neutral), r)


def decay_margin_inf(eq, rate, sampling=None):
    """Sampled infimum of p; positive means the rate clears its first hurdle."""
    if sampling is None:
        sampling = default_sampling(eq)
    return expr_inf(decay_margin_expr(eq, rate), sampling)


def _contraction(eq, rate, sampling, a_norm, neutral_gain):
    sigma = eq.g_lag.lag_sup
    p = decay_margin_expr(eq, rate)
    b_norms = [norm_abs_sup(t.b, sampling).value for t in eq.terms]
    prefactor = (rate
                 + sum(math.exp(rate * t.lag.lag_sup) * bn
                       for t, bn in zip(eq.terms, b_norms))
                 + rate * neutral_gain) / (1.0 - neutral_gain)
    weights = (quotient_abs_sup(eq.a.body, p, sampling)
               * (1.0 + rate * sigma) * math.exp(rate * sigma))
    weights += sum(quotient_abs_sup(t.b.body, p, sampling)
                   * math.exp(rate * t.lag.lag_sup) * t.lag.lag_sup
                   for t in eq.terms)
    return prefactor * weights


def contraction_factor(eq, rate, sampling=None):
    """The contraction factor M1 at the given rate.

    Raises :class:`InfeasibleRateError` naming the failed precondition
    (non-positive margin or amplified neutral norm at least one).
    """
    if sampling is None:
        sampling = default_sampling(eq)
    margin = decay_margin_inf(eq, rate, sampling)
    if not margin > 0.0:
        raise InfeasibleRateError("margin", f"inf p = {margin:.6g} <= 0")
    a_norm = norm_abs_sup(eq.a, sampling).value
    neutral_gain = math.exp(rate * eq.g_lag.lag_sup) * a_norm
    if not neutral_gain < 1.0:
        raise InfeasibleRateError(
            "neutral-gain", f"e^(rate*sigma)*sup|a| = {neutral_gain:.6g} >= 1")
    return _contraction(eq, rate, sampling, a_norm, neutral_gain)


def feasibility(eq, rate, sampling=None):
    """Check all certificate preconditions, reporting the first failure."""
    if sampling is None:
        sampling = default_sampling(eq)
    try:
        margin = decay_margin_inf(eq, rate, sampling)
        if not margin > 0.0:
            return Feasibility(False, "margin", margin, math.nan, math.nan)
        a_norm = norm_abs_sup(eq.a, sampling).value
        neutral_gain = math.exp(rate * eq.g_lag.lag_sup) * a_norm
        if not neutral_gain < 1.0:
            return Feasibility(False, "neutral-gain", margin, neutral_gain,
                               math.nan)
        m1 = _contraction(eq, rate, sampling, a_norm, neutral_gain)
        if not m1 < 1.0:
            return Feasibility(False, "contraction", margin, neutral_gain, m1)
        return Feasibility(True, None, margin, neutral_gain, m1)
    except (ex.EvalDomainError, OverflowError):
        return Feasibility(False, "evaluation", math.nan, math.nan, math.nan)


def optimize_rate(eq, rate_hi, tol=1e-6, sampling=None):
    """Largest certifiable decay rate found by scan plus bisection.

    Scans SCAN_POINTS rates on ``(0, rate_hi]`` from the top down, then
    bisects between the largest feasible and the smallest infeasible scanned
    rate.  Feasibility is re-verified before returning; no monotonicity in the
    rate is assumed beyond what was actually checked.  Returns None when no
    scanned rate is feasible.
    """
    if rate_hi <= 0.0 or tol <= 0.0:
        raise ValueError("rate_hi and tol must be positive")
    if sampling is None:
        sampling = default_sampling(eq)
    lo = None
    hi = None
    for i in range(SCAN_POINTS, 0, -1):
        lam = rate_hi * i / SCAN_POINTS
        if feasibility(eq, lam, sampling):
            lo = lam
            break
        hi = lam
    if lo is None:
        return None
    if hi is not None:
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if feasibility(eq, mid, sampling):
                lo = mid
            else:
                hi = mid
    if not feasibility(eq, lo, sampling):
        raise RuntimeError("feasibility re-verification failed at the optimum")
    return lo


def rate_shifted_equation(eq, rate):
    """The equation satisfied by z(t) = e^{rate (t - t0)} x(t).

    Its instantaneous margin d - c coincides with p, which links the kernel
    bound of the shifted equation to the contraction factor.
    """
    r = ex.num(rate)
    gain_g = ex.call("exp", ex.mul(r, eq.g_lag.body))
    a0 = ScalarFn(ex.mul(eq.a.body, gain_g))
    c = ScalarFn.constant(rate)
    d0 = ScalarFn(ex.mul(r, ex.mul(eq.a.body, gain_g)))
    terms = [GeneralTerm(d0, eq.g_lag)]
    for t in eq.terms:
        gain_k = ex.call("exp", ex.mul(r, t.lag.body))
        terms.append(GeneralTerm(ScalarFn(ex.mul(gain_k, t.b.body)), t.lag))
    return GeneralEquation(eq.t0, a0, eq.g_lag, c, tuple(terms))


def _segment_abs_sup(fn, t_hi, length):
    if length <= 0.0:
        return 0.0
    seg = Sampling(t_hi - length, t_hi, max(length * 1e-3, 1e-12))
    return norm_abs_sup(fn, seg).value


def certificate(eq, rate, init, f_bound=0.0, sampling=None):
    """Build the envelope certificate at a feasible rate.

    Initial-function norms are taken over exactly the finite segments the
    estimate uses: the derivative history over ``[t0 - sigma, t0]`` and the
    state history over ``[t0 - tau_k, t0]`` per term.
    """
    if sampling is None:
        sampling = default_sampling(eq)
    feas = feasibility(eq, rate, sampling)
    if not feas:
        details = {"margin": f"inf p = {feas.margin:.6g} <= 0",
                   "neutral-gain":
                       f"e^(rate*sigma)*sup|a| = {feas.neutral_gain:.6g} >= 1",
                   "contraction": f"M1 = {feas.contraction:.6g} >= 1"}
        raise InfeasibleRateError(
            feas.failing or "unknown",
            details.get(feas.failing, f"rate {rate} rejected"))
    m1 = feas.contraction
    m0 = 1.0 / (1.0 - m1)
    a_norm = norm_abs_sup(eq.a, sampling).value
    denom = rate * (1.0 - a_norm)
    sigma = eq.g_lag.lag_sup

    components = {"x0": abs(init.x0)}
    psi_norm = _segment_abs_sup(init.psi, eq.t0, sigma)
    components["deriv_history"] = (
        (math.exp(rate * sigma) - 1.0) / denom * a_norm * psi_norm)
    total = components["x0"] + components["deriv_history"]
    for k, term in enumerate(eq.terms):
        tau = term.lag.lag_sup
        b_norm = norm_abs_sup(term.b, sampling).value
        phi_norm = _segment_abs_sup(init.phi, eq.t0, tau)
        part = (math.exp(rate * tau) - 1.0) / denom * b_norm * phi_norm
        components[f"state_history_{k}"] = part
        total += part

    gain = m0 / denom
    if f_bound:
        components["forcing_bound"] = float(f_bound)
    return EnvelopeCertificate(eq.t0, rate, feas.margin, m1, m0,
                               m0 * total, gain, components)
