"""ndecert: decay certificates and simulation for scalar linear neutral
delay differential equations.

The package evaluates explicit exponential-stability tests, builds envelope
certificates |x(t)| <= C e^{-lam (t-t0)} + gain * sup|f|, and integrates the
equations by the method of steps to verify that certified envelopes dominate
actual trajectories.
"""

from ._kernels import BACKEND as KERNEL_BACKEND
from .config import ConfigError, ProblemConfig, load_config
from .criteria import (
    CriterionVerdict,
    GeneralEquation,
    GeneralTerm,
    KernelBound,
    StabilityReport,
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
from .envelope import (
    EnvelopeCertificate,
    Feasibility,
    InfeasibleRateError,
    certificate,
    contraction_factor,
    decay_margin_inf,
    feasibility,
    optimize_rate,
    rate_shifted_equation,
)
from .model import (
    InitialData,
    LagFn,
    NeutralEquation,
    NormEstimate,
    Sampling,
    ScalarFn,
    Term,
    ValidationError,
    Violation,
    estimate_inf,
    estimate_sup,
    validate,
)
from .solver import (
    Trajectory,
    convergence_order,
    fundamental_solution,
    history_eval,
    integrate,
)

__version__ = "0.1.0"
