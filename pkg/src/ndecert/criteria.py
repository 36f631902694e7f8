"""Explicit exponential-stability tests with fully exposed intermediates.

Every test returns a :class:`CriterionVerdict`; a verdict holds iff the
deciding inequality is strict (ties count as failures).  Tests that do not
apply to the given equation (wrong term count, sign assumptions violated)
report ``applicable=False`` instead of guessing.
"""

import math
from dataclasses import dataclass
from functools import reduce
from typing import Optional

from . import expr as ex
from .model import (
    POSITIVITY_MARGIN,
    LagFn,
    NeutralEquation,
    Sampling,
    ScalarFn,
    ValidationError,
    default_sampling,
    estimate_inf,
    estimate_sup,
    expr_extrema,
    expr_inf,
    expr_abs_sup,
    norm_abs_sup,
    quotient_abs_sup,
    validate,
)

__all__ = [
    "GeneralTerm", "GeneralEquation", "CriterionVerdict", "StabilityReport",
    "KernelBound", "delay_product_test", "clipped_coefficient_test",
    "excess_lag_test", "neutral_lag_weighted_test", "neutral_lag_threshold",
    "aggregate_delay_test", "aggregate_delay_lhs", "constant_coefficients_test",
    "single_delay_test", "kernel_uniform_bound", "run_all", "CRITERION_IDS",
]


@dataclass(frozen=True)
class GeneralTerm:
    d: ScalarFn
    lag: LagFn


@dataclass(frozen=True)
class GeneralEquation:
    """dy(t) - a0(t) dy(t - g_lag(t)) = c(t) y(t) - sum_k d_k(t) y(t - lag_k(t)).

    The uniform bound on its fundamental function (see
    :func:`kernel_uniform_bound`) drives the envelope certificates.
    """

    t0: float
    a0: ScalarFn
    g_lag: LagFn
    c: ScalarFn
    terms: tuple

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))


@dataclass(frozen=True)
class CriterionVerdict:
    criterion_id: str
    applicable: bool
    holds: bool
    lhs: float
    threshold: float
    intermediates: dict
    deciding: str = ""


@dataclass(frozen=True)
class StabilityReport:
    verdicts: tuple
    overall: bool


@dataclass(frozen=True)
class KernelBound:
    """Uniform bound on the fundamental function of a general equation."""

    contraction: float        # the K0 product; NaN when positivity fails
    bound: float              # 1/(1 - K0) when feasible, else NaN
    feasible: bool
    reason: Optional[str]     # "neutral-norm" | "positivity" | "contraction"
    witness_t: Optional[float]
    margin_inf: float         # sampled inf of d - c


def _verdict(cid, clauses, intermediates):
    """Combine strict clauses; expose the one with the largest margin of
    violation (or the tightest margin when all hold)."""
    holds = all(lhs < thr for _, lhs, thr in clauses)
    deciding, lhs, thr = max(clauses, key=lambda c: c[1] - c[2])
    return CriterionVerdict(cid, True, holds, lhs, thr, dict(intermediates),
                            deciding)


def _inapplicable(cid, reason, intermediates=()):
    return CriterionVerdict(cid, False, False, math.nan, math.nan,
                            dict(intermediates), reason)


def _b_sum_expr(eq):
    return reduce(ex.add, (t.b.body for t in eq.terms))


def delay_product_test(eq, sampling=None):
    """Small delay-coefficient product plus a small neutral part.

    Requires, for a single delayed term: positive coefficient, ``sup|b| * tau``
    at most 1/e, and ``sup|a| + sup|b| * sup|a/b| < 1``.
    """
    cid = "delay-product"
    if eq.m != 1:
        return _inapplicable(cid, "requires exactly one delayed term")
    if sampling is None:
        sampling = default_sampling(eq)
    term = eq.terms[0]
    b_inf = expr_inf(term.b.body, sampling)
    a_norm = norm_abs_sup(eq.a, sampling).value
    b_norm = norm_abs_sup(term.b, sampling).value
    tau = term.lag.lag_sup
    inter = {"b_inf": b_inf, "a_norm": a_norm, "b_norm": b_norm, "tau": tau,
             "delay_product": b_norm * tau, "inv_e": 1.0 / math.e}
    clauses = [("positive-coefficient", -b_inf, 0.0),
               ("delay-product", b_norm * tau, 1.0 / math.e)]
    if b_inf > POSITIVITY_MARGIN:
        a_over_b = quotient_abs_sup(eq.a.body, term.b.body, sampling)
        inter["a_over_b"] = a_over_b
        inter["neutral_sum"] = a_norm + b_norm * a_over_b
        clauses.append(("neutral-sum", inter["neutral_sum"], 1.0))
    return _verdict(cid, clauses, inter)


def clipped_coefficient_test(eq, sampling=None):
    """Test with the coefficient clipped at the critical level 1/(tau*e)."""
    cid = "clipped-coefficient"
    if eq.m != 1:
        return _inapplicable(cid, "requires exactly one delayed term")
    if sampling is None:
        sampling = default_sampling(eq)
    term = eq.terms[0]
    tau = term.lag.lag_sup
    if tau <= 0.0:
        return _inapplicable(cid, "requires a positive delay bound")
    b_inf = expr_inf(term.b.body, sampling)
    if not b_inf > POSITIVITY_MARGIN:
        return _inapplicable(cid, "requires a positive coefficient",
                             {"b_inf": b_inf})
    a_norm = norm_abs_sup(eq.a, sampling).value
    if not a_norm < 1.0:
        return _inapplicable(cid, "requires sup|a| < 1", {"a_norm": a_norm})
    clip = 1.0 / (tau * math.e)
    b1 = ex.call("min", term.b.body, ex.num(clip))
    b_norm = norm_abs_sup(term.b, sampling).value
    first = quotient_abs_sup(eq.a.body, b1, sampling) * b_norm / (1.0 - a_norm)
    second = expr_abs_sup(ex.div(ex.sub(term.b.body, b1), b1), sampling)
    inter = {"clip_level": clip, "first_term": first, "second_term": second,
             "a_norm": a_norm, "b_norm": b_norm, "tau": tau, "b_inf": b_inf}
    return _verdict(cid, [("clipped-sum", first + second, 1.0)], inter)


def excess_lag_test(eq, sampling=None):
    """Penalizes only the part of the lag exceeding the critical 1/(sup|b| e)."""
    cid = "excess-lag"
    if eq.m != 1:
        return _inapplicable(cid, "requires exactly one delayed term")
    if sampling is None:
        sampling = default_sampling(eq)
    term = eq.terms[0]
    b_inf = expr_inf(term.b.body, sampling)
    if not b_inf > POSITIVITY_MARGIN:
        return _inapplicable(cid, "requires a positive coefficient",
                             {"b_inf": b_inf})
    a_norm = norm_abs_sup(eq.a, sampling).value
    b_norm = norm_abs_sup(term.b, sampling).value
    level = 1.0 / (b_norm * math.e)
    pos_part = ex.call("max", ex.sub(term.lag.body, ex.num(level)), ex.num(0.0))
    excess = expr_abs_sup(pos_part, sampling)
    a_over_b = quotient_abs_sup(eq.a.body, term.b.body, sampling)
    lhs = b_norm * (a_over_b + excess)
    inter = {"lag_level": level, "excess_sup": excess, "a_over_b": a_over_b,
             "a_norm": a_norm, "b_norm": b_norm, "b_inf": b_inf}
    return _verdict(cid, [("excess-lag", lhs, 1.0 - a_norm)], inter)


def _signed_range(eq, sampling):
    """(a0, A0, b0, B0) signed bounds used by the neutral-lag weighted test."""
    term = eq.terms[0]
    a_lo = estimate_inf(eq.a, sampling).value
    a_hi = estimate_sup(eq.a, sampling).value
    b_lo = estimate_inf(term.b, sampling).value
    b_hi = estimate_sup(term.b, sampling).value
    return a_lo, a_hi, b_lo, b_hi


def neutral_lag_weighted_test(eq, sampling=None):
    """Test whose delay budget shrinks with the neutral lag bound sigma.

    Needs a nonnegative neutral coefficient and a positive delayed one:
    ``tau*B0 + sigma*A0*B0^2*(1-a0) / ((1-A0)^2 * b0) < 1 - A0``.
    """
    cid = "neutral-lag-weighted"
    if eq.m != 1:
        return _inapplicable(cid, "requires exactly one delayed term")
    if sampling is None:
        sampling = default_sampling(eq)
    a_lo, a_hi, b_lo, b_hi = _signed_range(eq, sampling)
    inter = {"a_inf": a_lo, "a_sup": a_hi, "b_inf": b_lo, "b_sup": b_hi,
             "tau": eq.terms[0].lag.lag_sup, "sigma": eq.g_lag.lag_sup}
    if a_lo < 0.0:
        return _inapplicable(cid, "requires a nonnegative neutral coefficient",
                             inter)
    if not a_hi < 1.0:
        return _inapplicable(cid, "requires sup a < 1", inter)
    if not b_lo > POSITIVITY_MARGIN:
        return _inapplicable(cid, "requires a positive coefficient", inter)
    tau = eq.terms[0].lag.lag_sup
    sigma = eq.g_lag.lag_sup
    delay_part = tau * b_hi
    neutral_part = sigma * a_hi * b_hi * b_hi * (1.0 - a_lo) / (
        (1.0 - a_hi) ** 2 * b_lo)
    inter["delay_part"] = delay_part
    inter["neutral_part"] = neutral_part
    return _verdict(cid, [("weighted-sum", delay_part + neutral_part,
                           1.0 - a_hi)], inter)


def neutral_lag_threshold(eq, sampling=None):
    """Largest neutral lag bound sigma for which the weighted test can hold.

    Solves the weighted-test inequality for sigma; returns ``inf`` when the
    test does not depend on sigma (zero neutral coefficient).
    """
    if eq.m != 1:
        raise ValueError("threshold requires exactly one delayed term")
    if sampling is None:
        sampling = default_sampling(eq)
    a_lo, a_hi, b_lo, b_hi = _signed_range(eq, sampling)
    if a_lo < 0.0 or not a_hi < 1.0 or not b_lo > POSITIVITY_MARGIN:
        raise ValueError("weighted test not applicable to this equation")
    tau = eq.terms[0].lag.lag_sup
    if a_hi == 0.0:
        return math.inf
    return ((1.0 - a_hi) - tau * b_hi) * (1.0 - a_hi) ** 2 * b_lo / (
        a_hi * b_hi * b_hi * (1.0 - a_lo))


def aggregate_delay_test(eq, sampling=None):
    """Main multi-delay test: every delay enters with its own weight.

    ``(sum_k sup|b_k| / (1 - sup|a|)) * (sup|a/b| + sum_k tau_k sup|b_k/b|) < 1``
    with ``b = sum_k b_k`` required positive.
    """
    cid = "aggregate-delay"
    if sampling is None:
        sampling = default_sampling(eq)
    b_sum = _b_sum_expr(eq)
    b_inf = expr_inf(b_sum, sampling)
    inter = {"b_inf": b_inf}
    if not b_inf > POSITIVITY_MARGIN:
        return _inapplicable(cid, "requires a positive coefficient sum", inter)
    a_norm = norm_abs_sup(eq.a, sampling).value
    inter["a_norm"] = a_norm
    if not a_norm < 1.0:
        return _inapplicable(cid, "requires sup|a| < 1", inter)
    sum_b_norms = sum(norm_abs_sup(t.b, sampling).value for t in eq.terms)
    a_over_b = quotient_abs_sup(eq.a.body, b_sum, sampling)
    delay_sum = sum(t.lag.lag_sup * quotient_abs_sup(t.b.body, b_sum, sampling)
                    for t in eq.terms)
    lhs = (sum_b_norms / (1.0 - a_norm)) * (a_over_b + delay_sum)
    inter.update({"sum_b_norms": sum_b_norms, "a_over_b": a_over_b,
                  "delay_sum": delay_sum})
    return _verdict(cid, [("aggregate", lhs, 1.0)], inter)


def aggregate_delay_lhs(eq, sampling=None):
    """The aggregate test's left-hand side (NaN when not applicable)."""
    return aggregate_delay_test(eq, sampling).lhs


def constant_coefficients_test(eq, sampling=None):
    """For constant positive coefficients: sum b_k tau_k < 1 - 2 sup|a|."""
    cid = "constant-coefficients"
    if sampling is None:
        sampling = default_sampling(eq)
    values = []
    for term in eq.terms:
        if not term.b.is_constant():
            return _inapplicable(cid, "requires constant coefficients")
        values.append(term.b.constant_value())
    if min(values) <= 0.0:
        return _inapplicable(cid, "requires positive coefficients",
                             {"b_min": min(values)})
    a_norm = norm_abs_sup(eq.a, sampling).value
    weighted = sum(v * t.lag.lag_sup for v, t in zip(values, eq.terms))
    inter = {"a_norm": a_norm, "weighted_delay_sum": weighted}
    clauses = [("neutral-half", a_norm, 0.5),
               ("weighted-delay-sum", weighted, 1.0 - 2.0 * a_norm)]
    return _verdict(cid, clauses, inter)


def single_delay_test(eq, sampling=None):
    """One-delay test: ``(sup|a/b| + tau) * sup|b| < 1 - sup|a|``."""
    cid = "single-delay"
    if eq.m != 1:
        return _inapplicable(cid, "requires exactly one delayed term")
    if sampling is None:
        sampling = default_sampling(eq)
    term = eq.terms[0]
    b_inf = expr_inf(term.b.body, sampling)
    if not b_inf > POSITIVITY_MARGIN:
        return _inapplicable(cid, "requires a positive coefficient",
                             {"b_inf": b_inf})
    a_norm = norm_abs_sup(eq.a, sampling).value
    if not a_norm < 1.0:
        return _inapplicable(cid, "requires sup|a| < 1", {"a_norm": a_norm})
    b_norm = norm_abs_sup(term.b, sampling).value
    a_over_b = quotient_abs_sup(eq.a.body, term.b.body, sampling)
    tau = term.lag.lag_sup
    lhs = (a_over_b + tau) * b_norm
    inter = {"a_norm": a_norm, "b_norm": b_norm, "a_over_b": a_over_b,
             "tau": tau, "b_inf": b_inf}
    return _verdict(cid, [("single-delay", lhs, 1.0 - a_norm)], inter)


def _general_sampling(geq):
    width = 20.0 * max(geq.g_lag.lag_sup,
                       *(t.lag.lag_sup for t in geq.terms), 2.0 * math.pi)
    return Sampling(geq.t0, geq.t0 + width, 1e-3 * width)


def kernel_uniform_bound(geq, sampling=None):
    """Uniform bound on |Y(t,s)| for a general equation with a non-delay term.

    Feasible when sup|a0| < 1, the instantaneous margin d - c stays positive,
    and the weighted contraction product K0 is below 1; the bound is then
    ``1/(1 - K0)``.
    """
    if sampling is None:
        sampling = _general_sampling(geq)
    a0_norm = norm_abs_sup(geq.a0, sampling).value
    if not a0_norm < 1.0:
        return KernelBound(math.nan, math.nan, False, "neutral-norm", None,
                           math.nan)
    d_expr = reduce(ex.add, (t.d.body for t in geq.terms))
    margin_expr = ex.sub(d_expr, geq.c.body)
    m_lo, t_lo, _, _ = expr_extrema(margin_expr, sampling)
    if not m_lo > POSITIVITY_MARGIN:
        return KernelBound(math.nan, math.nan, False, "positivity", t_lo, m_lo)
    numer = norm_abs_sup(geq.c, sampling).value + sum(
        norm_abs_sup(t.d, sampling).value for t in geq.terms)
    weights = quotient_abs_sup(geq.a0.body, margin_expr, sampling) + sum(
        t.lag.lag_sup * quotient_abs_sup(t.d.body, margin_expr, sampling)
        for t in geq.terms)
    k0 = (numer / (1.0 - a0_norm)) * weights
    if not k0 < 1.0:
        return KernelBound(k0, math.nan, False, "contraction", None, m_lo)
    return KernelBound(k0, 1.0 / (1.0 - k0), True, None, None, m_lo)


CRITERION_IDS = (
    "delay-product",
    "clipped-coefficient",
    "excess-lag",
    "neutral-lag-weighted",
    "aggregate-delay",
    "constant-coefficients",
    "single-delay",
)

_ALL_TESTS = (
    delay_product_test,
    clipped_coefficient_test,
    excess_lag_test,
    neutral_lag_weighted_test,
    aggregate_delay_test,
    constant_coefficients_test,
    single_delay_test,
)


def run_all(eq, sampling=None):
    """Evaluate every criterion; inapplicable ones are flagged, never guessed.

    Raises :class:`ValidationError` when the equation data violate the
    standing assumptions.
    """
    violations = validate(eq, sampling)
    if violations:
        raise ValidationError(violations)
    if sampling is None:
        sampling = default_sampling(eq)
    verdicts = tuple(test(eq, sampling) for test in _ALL_TESTS)
    return StabilityReport(verdicts, any(v.holds for v in verdicts))
