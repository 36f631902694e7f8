import math
from pathlib import Path

import pytest

from ndecert.model import InitialData, LagFn, NeutralEquation, ScalarFn, Term

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"

TAU_SUP = 1.0 / math.e + 0.1
TAU_INF = 1.0 / math.e - 0.1


def oscillating_term():
    return Term(ScalarFn.constant(1.0),
                LagFn.from_source("1/e + 0.1*sin(t)", TAU_SUP, TAU_INF))


def make_equation(sigma=0.5):
    """The oscillating-delay equation with a constant neutral lag sigma."""
    return NeutralEquation(0.0, ScalarFn.constant(0.15), LagFn.constant(sigma),
                           (oscillating_term(),))


def make_variable_lag_equation():
    """Same delayed term, neutral lag 2.7 + 0.3 cos t in [2.4, 3]."""
    return NeutralEquation(0.0, ScalarFn.constant(0.15),
                           LagFn.from_source("2.7 + 0.3*cos(t)", 3.0, 2.4),
                           (oscillating_term(),))


def make_initial():
    return InitialData(ScalarFn.from_source("cos(t)"),
                       ScalarFn.from_source("sin(2*t) + 2"), 1.0)


def constant_equation(a, b, tau, sigma=1.0, t0=0.0):
    """Constant-coefficient equation for hand-checkable cases."""
    return NeutralEquation(t0, ScalarFn.constant(a), LagFn.constant(sigma),
                           (Term(ScalarFn.constant(b), LagFn.constant(tau)),))


def random_equation(rng, max_terms=2):
    """Random smooth equation with positive lags and sup|a| < 1."""
    a0 = rng.uniform(0.0, 0.3)
    if rng.random() < 0.5:
        a1 = rng.uniform(0.0, 0.5) * a0
        a = ScalarFn.from_source(f"{a0} + {a1}*cos(t)", a0 + a1, a0 - a1)
    else:
        a = ScalarFn.constant(a0)
    s0 = rng.uniform(0.3, 1.0)
    s1 = rng.uniform(0.0, 0.3) * s0
    g = LagFn.from_source(f"{s0} + {s1}*sin(t)", s0 + s1, s0 - s1)
    terms = []
    for _ in range(int(rng.integers(1, max_terms + 1))):
        b0 = rng.uniform(0.2, 1.2)
        b1 = rng.uniform(0.0, 0.4) * b0
        b = ScalarFn.from_source(f"{b0} + {b1}*sin(2*t)")
        tau0 = rng.uniform(0.2, 0.8)
        tau1 = rng.uniform(0.0, 0.3) * tau0
        lag = LagFn.from_source(f"{tau0} + {tau1}*cos(3*t)",
                                tau0 + tau1, tau0 - tau1)
        terms.append(Term(b, lag))
    return NeutralEquation(0.0, a, g, tuple(terms))


@pytest.fixture(scope="session")
def osc_equation():
    return make_equation()


@pytest.fixture(scope="session")
def osc_initial():
    return make_initial()


@pytest.fixture(scope="session")
def variable_lag_equation():
    return make_variable_lag_equation()
