import math

import pytest

from ndecert.criteria import (
    GeneralEquation,
    GeneralTerm,
    aggregate_delay_lhs,
    aggregate_delay_test,
    clipped_coefficient_test,
    constant_coefficients_test,
    delay_product_test,
    excess_lag_test,
    kernel_uniform_bound,
    neutral_lag_threshold,
    neutral_lag_weighted_test,
    run_all,
    single_delay_test,
)
from ndecert.model import (
    LagFn,
    NeutralEquation,
    ScalarFn,
    Term,
    ValidationError,
)

from conftest import TAU_SUP, constant_equation, make_equation

# hand-computed oracle values for the oscillating-delay benchmark equation
# (a = 0.15, b = 1, lag sup tau = 1/e + 0.1); all follow by plain arithmetic
# from the printed criterion formulas with exact constant norms.
AGGREGATE_LHS = (0.15 + TAU_SUP) / 0.85                      # 0.7269169896...
CLIPPED_LHS = 0.15 * (1.0 + 0.1 * math.e) / 0.85 + 0.1 * math.e  # 0.4962684504...
EXCESS_LHS = 1.0 * (0.15 + 0.1)                              # 0.25
WEIGHTED_LHS = TAU_SUP + 0.5 * 0.15 * 0.85 / 0.85 ** 2       # 0.5561147353...
SIGMA_STAR = (0.85 - TAU_SUP) * 0.85 ** 2 / (0.15 * 0.85)    # 2.1653498334...
SINGLE_LHS = 0.15 + TAU_SUP                                  # 0.6178794412...


class TestDelayProduct:
    def test_benchmark_fails_on_delay_product(self):
        v = delay_product_test(make_equation())
        assert v.applicable and not v.holds
        assert v.deciding == "delay-product"
        assert v.lhs == pytest.approx(TAU_SUP, abs=1e-12)
        assert v.threshold == pytest.approx(1.0 / math.e, abs=1e-15)

    def test_small_delay_no_neutral_holds(self):
        v = delay_product_test(constant_equation(0.0, 1.0, 0.3))
        assert v.holds

    def test_neutral_sum_at_one_fails(self):
        # 0.5 + 1 * 0.5 = 1 is not strictly below 1
        v = delay_product_test(constant_equation(0.5, 1.0, 0.3))
        assert not v.holds
        assert v.intermediates["neutral_sum"] == pytest.approx(1.0, abs=1e-12)

    def test_two_terms_inapplicable(self):
        eq = make_equation()
        two = NeutralEquation(eq.t0, eq.a, eq.g_lag, eq.terms * 2)
        assert not delay_product_test(two).applicable


class TestClippedCoefficient:
    def test_zero_at_exact_clip_level(self):
        tau = 0.5
        v = clipped_coefficient_test(
            constant_equation(0.0, 1.0 / (tau * math.e), tau))
        assert v.holds
        assert v.lhs == pytest.approx(0.0, abs=1e-12)

    def test_benchmark_matches_hand_value(self):
        v = clipped_coefficient_test(make_equation())
        assert v.lhs == pytest.approx(CLIPPED_LHS, abs=1e-9)
        assert v.intermediates["clip_level"] == pytest.approx(
            1.0 / (TAU_SUP * math.e), abs=1e-12)

    def test_large_neutral_coefficient_fails(self):
        v = clipped_coefficient_test(constant_equation(0.9, 1.0, 1.0))
        assert v.applicable and not v.holds
        assert v.lhs > 9.0  # >= ||a/b1|| * ||b|| / 0.1


class TestExcessLag:
    def test_lag_at_critical_level_holds(self):
        v = excess_lag_test(constant_equation(0.0, 1.0, 1.0 / math.e))
        assert v.holds
        assert v.lhs == pytest.approx(0.0, abs=1e-12)

    def test_benchmark_matches_hand_value(self):
        v = excess_lag_test(make_equation())
        assert v.lhs == pytest.approx(EXCESS_LHS, abs=1e-3)
        assert v.threshold == pytest.approx(0.85, abs=1e-12)

    def test_constant_excess(self):
        v = excess_lag_test(constant_equation(0.0, 1.0, 1.0 / math.e + 0.9))
        assert v.holds
        assert v.lhs == pytest.approx(0.9, abs=1e-9)


class TestNeutralLagWeighted:
    def test_benchmark_sigma_half(self):
        v = neutral_lag_weighted_test(make_equation(0.5))
        assert v.holds
        assert v.lhs == pytest.approx(WEIGHTED_LHS, abs=1e-9)

    def test_benchmark_sigma_three_fails(self):
        v = neutral_lag_weighted_test(make_equation(3.0))
        assert v.applicable and not v.holds

    def test_zero_neutral_reduces_to_delay_product(self):
        v = neutral_lag_weighted_test(constant_equation(0.0, 1.0, 0.5))
        assert v.holds
        assert v.lhs == pytest.approx(0.5, abs=1e-12)

    def test_negative_neutral_coefficient_inapplicable(self):
        assert not neutral_lag_weighted_test(
            constant_equation(-0.1, 1.0, 0.3)).applicable


class TestNeutralLagThreshold:
    def test_benchmark_value(self):
        assert neutral_lag_threshold(make_equation()) == pytest.approx(
            SIGMA_STAR, abs=1e-9)
        assert SIGMA_STAR == pytest.approx(2.1653, abs=1e-3)

    def test_never_satisfiable_sign(self):
        # tau*B0 >= 1 - A0 pushes the threshold non-positive
        assert neutral_lag_threshold(constant_equation(0.15, 1.0, 0.9)) <= 0.0

    def test_hand_case(self):
        assert neutral_lag_threshold(constant_equation(0.15, 1.0, 0.35)) == \
            pytest.approx((0.85 - 0.35) * 0.85 ** 2 / (0.15 * 0.85), abs=1e-12)

    def test_sigma_independent_sentinel(self):
        assert neutral_lag_threshold(constant_equation(0.0, 1.0, 0.3)) == math.inf

    def test_flip_consistency(self):
        sigma_star = neutral_lag_threshold(make_equation())
        assert neutral_lag_weighted_test(
            make_equation(sigma_star * (1 - 1e-6))).holds
        assert not neutral_lag_weighted_test(
            make_equation(sigma_star * (1 + 1e-6))).holds
        assert neutral_lag_weighted_test(make_equation(sigma_star - 1e-3)).holds
        assert not neutral_lag_weighted_test(
            make_equation(sigma_star + 1e-3)).holds


class TestAggregateDelay:
    def test_benchmark_value(self):
        v = aggregate_delay_test(make_equation())
        assert v.holds
        assert v.lhs == pytest.approx(AGGREGATE_LHS, abs=2e-3)
        assert v.lhs == pytest.approx(0.7269, abs=2e-3)

    def test_boundary_fails(self):
        v = aggregate_delay_test(constant_equation(0.0, 1.0, 1.0))
        assert v.applicable and not v.holds
        assert v.lhs == pytest.approx(1.0, abs=1e-12)

    def test_two_terms(self):
        eq = NeutralEquation(
            0.0, ScalarFn.constant(0.0), LagFn.constant(1.0),
            (Term(ScalarFn.constant(1.0), LagFn.constant(0.1)),
             Term(ScalarFn.constant(1.0), LagFn.constant(0.2))))
        v = aggregate_delay_test(eq)
        assert v.holds
        assert v.lhs == pytest.approx(0.3, abs=1e-12)

    def test_nonpositive_sum_inapplicable(self):
        assert not aggregate_delay_test(
            constant_equation(0.1, -1.0, 0.3)).applicable


class TestConstantCoefficients:
    def test_benchmark_holds(self):
        v = constant_coefficients_test(make_equation())
        assert v.holds
        assert v.intermediates["weighted_delay_sum"] == pytest.approx(
            TAU_SUP, abs=1e-12)
        assert 1.0 - 2.0 * 0.15 == pytest.approx(0.7)

    def test_neutral_half_boundary(self):
        assert not constant_coefficients_test(
            constant_equation(0.5, 1.0, 0.1)).holds

    def test_classical_bound_without_neutral(self):
        assert constant_coefficients_test(
            constant_equation(0.0, 1.0, 0.99)).holds

    def test_varying_coefficient_inapplicable(self):
        eq = make_equation()
        varying = NeutralEquation(
            eq.t0, eq.a, eq.g_lag,
            (Term(ScalarFn.from_source("1 + 0.1*sin(t)"), eq.terms[0].lag),))
        assert not constant_coefficients_test(varying).applicable


class TestSingleDelay:
    def test_benchmark_value(self):
        v = single_delay_test(make_equation())
        assert v.holds
        assert v.lhs == pytest.approx(SINGLE_LHS, abs=1e-9)
        assert v.lhs == pytest.approx(0.6179, abs=1e-3)

    def test_reduces_to_delay_bound_without_neutral(self):
        v = single_delay_test(constant_equation(0.0, 2.0, 0.4))
        assert v.holds
        assert v.lhs == pytest.approx(0.8, abs=1e-12)

    def test_hand_failure_case(self):
        v = single_delay_test(constant_equation(0.4, 1.0, 0.3))
        assert v.applicable and not v.holds
        assert v.lhs == pytest.approx(0.7, abs=1e-12)
        assert v.threshold == pytest.approx(0.6, abs=1e-12)


class TestInvariants:
    @pytest.mark.parametrize("test_fn", [aggregate_delay_test,
                                         constant_coefficients_test,
                                         single_delay_test])
    def test_tau_monotone(self, test_fn):
        # growing the delay never turns a failing verdict into a holding one
        taus = [0.1, 0.3, 0.5, 0.8, 1.2, 2.0]
        verdicts = [test_fn(constant_equation(0.2, 1.0, tau)) for tau in taus]
        seen_false = False
        for v in verdicts:
            if seen_false:
                assert not v.holds
            if v.applicable and not v.holds:
                seen_false = True

    @pytest.mark.parametrize("c", [0.5, 2.0, 7.3])
    def test_time_rescaling_invariance(self, c):
        base = constant_equation(0.2, 1.3, 0.4, sigma=0.6)
        scaled = constant_equation(0.2, 1.3 * c, 0.4 / c, sigma=0.6 / c)
        for fn in (aggregate_delay_test, constant_coefficients_test,
                   single_delay_test):
            assert fn(scaled).lhs == pytest.approx(fn(base).lhs, rel=1e-12)


class TestKernelUniformBound:
    def test_no_delay_no_neutral(self):
        geq = GeneralEquation(
            0.0, ScalarFn.constant(0.0), LagFn.constant(1.0),
            ScalarFn.constant(0.0),
            (GeneralTerm(ScalarFn.constant(1.0), LagFn.constant(0.0)),))
        kb = kernel_uniform_bound(geq)
        assert kb.feasible
        assert kb.contraction == 0.0
        assert kb.bound == 1.0

    def test_positivity_failure_carries_witness(self):
        geq = GeneralEquation(
            0.0, ScalarFn.constant(0.0), LagFn.constant(1.0),
            ScalarFn.constant(2.0),
            (GeneralTerm(ScalarFn.constant(1.0), LagFn.constant(0.5)),))
        kb = kernel_uniform_bound(geq)
        assert not kb.feasible
        assert kb.reason == "positivity"
        assert kb.witness_t is not None
        assert kb.margin_inf == pytest.approx(-1.0, abs=1e-12)

    def test_neutral_norm_gate(self):
        geq = GeneralEquation(
            0.0, ScalarFn.constant(1.0), LagFn.constant(1.0),
            ScalarFn.constant(0.0),
            (GeneralTerm(ScalarFn.constant(1.0), LagFn.constant(0.5)),))
        assert kernel_uniform_bound(geq).reason == "neutral-norm"

    def test_hand_computed_contraction(self):
        # a0=0.1 (lag 0.2), c=0.2, d0=1 (lag 0.3):
        # K0 = (1.2/0.9) * (0.1/0.8 + 0.3/0.8) = 2/3
        geq = GeneralEquation(
            0.0, ScalarFn.constant(0.1), LagFn.constant(0.2),
            ScalarFn.constant(0.2),
            (GeneralTerm(ScalarFn.constant(1.0), LagFn.constant(0.3)),))
        kb = kernel_uniform_bound(geq)
        assert kb.feasible
        assert kb.contraction == pytest.approx(2.0 / 3.0, abs=1e-12)
        assert kb.bound == pytest.approx(3.0, abs=1e-9)


class TestRunAll:
    def test_benchmark_sigma_half(self):
        report = run_all(make_equation(0.5))
        assert report.overall
        holding = {v.criterion_id for v in report.verdicts if v.holds}
        assert {"neutral-lag-weighted", "aggregate-delay",
                "constant-coefficients", "single-delay"} <= holding
        assert "delay-product" not in holding

    def test_benchmark_sigma_three(self):
        report = run_all(make_equation(3.0))
        by_id = {v.criterion_id: v for v in report.verdicts}
        assert not by_id["neutral-lag-weighted"].holds
        assert by_id["constant-coefficients"].holds
        assert by_id["single-delay"].holds
        assert report.overall

    def test_inconclusive_equation(self):
        report = run_all(constant_equation(0.9, 1.0, 1.0))
        assert not report.overall
        assert all(not v.holds for v in report.verdicts)

    def test_validation_aborts(self):
        with pytest.raises(ValidationError):
            run_all(constant_equation(1.1, 1.0, 0.3))
