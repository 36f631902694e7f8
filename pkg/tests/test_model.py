import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ndecert import expr as ex
from ndecert.model import (
    LagFn,
    NeutralEquation,
    Sampling,
    ScalarFn,
    Term,
    estimate_inf,
    estimate_sup,
    expr_abs_sup,
    norm_abs_sup,
    validate,
)

from conftest import make_equation


class TestEstimates:
    def test_declared_constant_wins(self):
        fn = ScalarFn.constant(0.15)
        est = estimate_sup(fn, Sampling(0.0, 10.0, 0.1))
        assert est.value == 0.15
        assert est.method == "declared"

    def test_oscillating_lag_sup(self):
        fn = ScalarFn.from_source("1/e + 0.1*sin(t)")
        est = estimate_sup(fn, Sampling(0.0, 4.0 * math.pi, 1e-3))
        assert est.method == "sampled"
        assert est.value == pytest.approx(1.0 / math.e + 0.1, abs=1e-4)

    def test_oscillating_lag_inf(self):
        fn = ScalarFn.from_source("1/e + 0.1*sin(t)")
        est = estimate_inf(fn, Sampling(0.0, 4.0 * math.pi, 1e-3))
        assert est.value == pytest.approx(1.0 / math.e - 0.1, abs=1e-4)

    def test_sin_sup(self):
        fn = ScalarFn.from_source("sin(t)")
        est = estimate_sup(fn, Sampling(0.0, 2.0 * math.pi, 1e-3))
        assert est.value == pytest.approx(1.0, abs=1e-6)

    def test_shifted_sin_inf(self):
        fn = ScalarFn.from_source("2 + sin(t)")
        est = estimate_inf(fn, Sampling(0.0, 4.0 * math.pi, 1e-3))
        assert est.value == pytest.approx(1.0, abs=1e-6)

    def test_constant_one(self):
        est = estimate_inf(ScalarFn.constant(1.0), Sampling(0.0, 1.0, 0.1))
        assert est.value == 1.0

    def test_declared_vs_sampled_agree(self):
        sampling = Sampling(0.0, 4.0 * math.pi, 1e-3)
        declared = ScalarFn.from_source("0.3*cos(t)", sup=0.3, inf=-0.3)
        bare = ScalarFn.from_source("0.3*cos(t)")
        assert norm_abs_sup(declared, sampling).method == "declared"
        assert norm_abs_sup(bare, sampling).value == pytest.approx(
            norm_abs_sup(declared, sampling).value, abs=1e-5)

    @given(st.sampled_from(["sin(t)", "2+sin(3*t)", "t*0.01 + cos(t)",
                            "exp(sin(t))*0.5", "abs(sin(2*t)) - 0.3"]),
           st.floats(min_value=0.02, max_value=0.8))
    @settings(max_examples=60, deadline=None)
    def test_refinement_monotone(self, source, step):
        # halving the step samples a superset: sup never shrinks, inf never grows
        tree = ex.parse(source)
        coarse = Sampling(0.0, 10.0, step)
        fine = coarse.refined()
        assert expr_abs_sup(tree, fine) >= expr_abs_sup(tree, coarse)
        fn = ScalarFn(tree)
        assert estimate_sup(fn, fine).value >= estimate_sup(fn, coarse).value
        assert estimate_inf(fn, fine).value <= estimate_inf(fn, coarse).value


class TestValidate:
    def test_benchmark_equation_clean(self):
        assert validate(make_equation(0.5)) == []

    def test_neutral_coefficient_too_large(self):
        eq = make_equation()
        bad = NeutralEquation(eq.t0, ScalarFn.constant(1.0), eq.g_lag, eq.terms)
        violations = validate(bad)
        assert any("sup|a|" in v.message for v in violations)

    def test_negative_lag(self):
        eq = make_equation()
        bad = NeutralEquation(eq.t0, eq.a, eq.g_lag,
                              (Term(eq.terms[0].b, LagFn.constant(-0.1)),))
        violations = validate(bad)
        assert any("negative lag" in v.message for v in violations)

    def test_lag_outside_declared_bounds_has_witness(self):
        eq = make_equation()
        lag = LagFn.from_source("1/e + 0.1*sin(t)", sup=0.40, inf=0.30)
        bad = NeutralEquation(eq.t0, eq.a, eq.g_lag, (Term(eq.terms[0].b, lag),))
        violations = validate(bad)
        assert violations and violations[0].t is not None

    def test_declared_bound_violation_detected(self):
        eq = make_equation()
        a = ScalarFn.from_source("0.2*sin(t)", sup=0.1, inf=-0.1)
        bad = NeutralEquation(eq.t0, a, eq.g_lag, eq.terms)
        violations = validate(bad)
        assert any(v.fieldname == "a" and "declared sup" in v.message
                   for v in violations)

    def test_requires_a_term(self):
        eq = make_equation()
        with pytest.raises(ValueError):
            NeutralEquation(eq.t0, eq.a, eq.g_lag, ())
