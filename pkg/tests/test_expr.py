import math
import struct

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ndecert import expr as ex


class TestParseEval:
    def test_precedence_plus_times(self):
        assert ex.evaluate(ex.parse("2+3*t"), 1.0) == 5.0

    def test_named_constant_e(self):
        v = ex.evaluate(ex.parse("1/e + 0.1*sin(t)"), 0.0)
        assert v == pytest.approx(1.0 / math.e, abs=1e-15)

    def test_plain_number(self):
        for t in (0.0, -3.2, 17.0):
            assert ex.evaluate(ex.parse("0.15"), t) == 0.15

    def test_pythagorean_identity(self):
        assert ex.evaluate(ex.parse("sin(t)^2 + cos(t)^2"), 1.3) == pytest.approx(
            1.0, abs=1e-12)

    def test_exp_one(self):
        assert ex.evaluate(ex.parse("exp(1)"), 0.0) == pytest.approx(math.e,
                                                                     abs=1e-15)

    def test_power_right_assoc(self):
        assert ex.evaluate(ex.parse("2^3^2"), 0.0) == 512.0

    def test_unary_minus_binds_below_power(self):
        assert ex.evaluate(ex.parse("-2^2"), 0.0) == -4.0
        assert ex.evaluate(ex.parse("2^-1"), 0.0) == 0.5

    def test_scientific_notation(self):
        assert ex.evaluate(ex.parse("1e-3 + 2.5E+1"), 0.0) == pytest.approx(25.001)

    def test_min_max_two_args(self):
        assert ex.evaluate(ex.parse("min(3, t)"), 7.0) == 3.0
        assert ex.evaluate(ex.parse("max(3, t)"), 7.0) == 7.0

    def test_whitespace_insensitive(self):
        assert ex.parse(" 1 + 2 * t ") == ex.parse("1+2*t")


class TestErrors:
    def test_division_by_zero_carries_t(self):
        with pytest.raises(ex.EvalDomainError) as err:
            ex.evaluate(ex.parse("1/t"), 0.0)
        assert err.value.t == 0.0

    def test_log_domain(self):
        with pytest.raises(ex.EvalDomainError):
            ex.evaluate(ex.parse("log(t)"), -1.0)

    def test_sqrt_domain(self):
        with pytest.raises(ex.EvalDomainError):
            ex.evaluate(ex.parse("sqrt(t)"), -4.0)

    def test_overflow_is_an_error_not_inf(self):
        with pytest.raises(ex.EvalDomainError):
            ex.evaluate(ex.parse("exp(t)"), 1e6)

    def test_invalid_power(self):
        with pytest.raises(ex.EvalDomainError):
            ex.evaluate(ex.parse("(-2)^0.5"), 0.0)

    def test_syntax_error_position(self):
        with pytest.raises(ex.ParseError) as err:
            ex.parse("2 + * 3")
        assert err.value.position == 4

    def test_unknown_identifier(self):
        with pytest.raises(ex.UnknownIdentifierError):
            ex.parse("2 + x")

    def test_no_implicit_multiplication(self):
        with pytest.raises(ex.ParseError):
            ex.parse("2t")

    def test_arity_enforced(self):
        with pytest.raises(ex.ParseError):
            ex.parse("min(1)")
        with pytest.raises(ex.ParseError):
            ex.parse("sin(1, 2)")

    def test_empty_source(self):
        with pytest.raises(ex.ParseError):
            ex.parse("   ")


# random expression trees of bounded depth for the round-trip property
_leaves = st.one_of(
    st.floats(min_value=0.0, max_value=1e6, allow_nan=False,
              allow_infinity=False).map(ex.Num),
    st.just(ex.Var()),
    st.sampled_from(["pi", "e"]).map(ex.Const),
)


def _extend(children):
    unary = children.map(lambda c: ex.Unary("-", c))
    binary = st.tuples(st.sampled_from("+-*/^"), children, children).map(
        lambda t: ex.Binary(t[0], t[1], t[2]))
    call1 = st.tuples(st.sampled_from(["sin", "cos", "exp", "log", "sqrt", "abs"]),
                      children).map(lambda t: ex.Call(t[0], (t[1],)))
    call2 = st.tuples(st.sampled_from(["min", "max"]), children, children).map(
        lambda t: ex.Call(t[0], (t[1], t[2])))
    return st.one_of(unary, binary, call1, call2)


_trees = st.recursive(_leaves, _extend, max_leaves=32)


class TestRoundTrip:
    @given(_trees)
    @settings(max_examples=300, deadline=None)
    def test_unparse_parse_round_trip(self, tree):
        assert ex.parse(ex.unparse(tree)) == tree

    def test_parse_unparse_reparse_on_sources(self):
        sources = ["2+3*t", "1/e + 0.1*sin(t)", "-(t+1)*2^t",
                   "min(sin(t), 1/(2*e))", "t^-2 - abs(-t)", "2^3^t/4"]
        for src in sources:
            tree = ex.parse(src)
            assert ex.parse(ex.unparse(tree)) == tree


class TestPurity:
    def test_eval_bitwise_deterministic(self):
        tree = ex.parse("sin(t)*exp(t/3) - sqrt(abs(t))^1.5")
        a = ex.evaluate(tree, 2.34567)
        b = ex.evaluate(tree, 2.34567)
        assert struct.pack("<d", a) == struct.pack("<d", b)
