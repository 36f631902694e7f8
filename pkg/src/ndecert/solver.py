"""Method-of-steps integration with joint x / dx history.

The integrator advances with classical fixed-step RK4; delayed state values
come from cubic-Hermite dense output and delayed derivatives from piecewise
linear interpolation of the stored node derivatives (a neutral equation's
derivative is only piecewise continuous, so higher-order derivative
interpolation would be spurious).  After every step the node derivative is
recomputed from the equation itself, keeping the stored history
self-consistent.
"""

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from . import expr as ex
from ._kernels.opcodes import (
    ERR_SHORT_DELAY,
    ERR_STATE_NONFINITE,
    OK,
    P_A,
    P_F,
    P_GLAG,
    P_PHI,
    P_PSI,
    P_TERMS,
)
from ._kernels.pack import pack_programs
from .model import InitialData, ValidationError, validate

__all__ = [
    "Trajectory", "SolverError", "ShortDelayError", "SolutionOverflowError",
    "HistoryBoundsError", "integrate", "history_eval", "fundamental_solution",
    "convergence_order",
]


class SolverError(RuntimeError):
    pass


class ShortDelayError(SolverError):
    """A delayed argument landed inside the step being computed."""

    def __init__(self, fieldname, u):
        super().__init__(
            f"delayed argument of {fieldname} falls at t={u:.6g}, inside the "
            f"current step; reduce h or declare a larger lag lower bound")
        self.fieldname = fieldname
        self.u = u


class SolutionOverflowError(SolverError):
    def __init__(self, t):
        super().__init__(f"solution became non-finite near t={t:.6g}")
        self.t = t


class HistoryBoundsError(SolverError):
    def __init__(self, t, frontier):
        super().__init__(f"t={t:.6g} is beyond the computed frontier {frontier:.6g}")
        self.t = t


@dataclass
class Trajectory:
    """Uniform-grid samples of x and its right derivative, plus dense output."""

    t0: float
    h: float
    xs: np.ndarray
    dxs: np.ndarray

    @property
    def n_steps(self):
        return len(self.xs) - 1

    @property
    def frontier(self):
        return self.t0 + self.n_steps * self.h

    @property
    def nodes(self):
        return self.t0 + np.arange(len(self.xs)) * self.h

    def _locate(self, t):
        t = np.asarray(t, dtype=float)
        r = (t - self.t0) / self.h
        j = np.clip(np.floor(r).astype(int), 0, max(self.n_steps - 1, 0))
        th = np.clip(r - j, 0.0, 1.0)
        # exact node hits return stored samples untouched
        near = np.rint(r).astype(int)
        on_node = (t == self.t0 + near * self.h) & (near >= 0) & (near <= self.n_steps)
        return j, th, near, on_node

    def x_at(self, t):
        """Cubic-Hermite dense value of x on [t0, frontier]."""
        j, th, near, on_node = self._locate(t)
        t2 = th * th
        t3 = t2 * th
        val = ((2.0 * t3 - 3.0 * t2 + 1.0) * self.xs[j]
               + (t3 - 2.0 * t2 + th) * self.h * self.dxs[j]
               + (-2.0 * t3 + 3.0 * t2) * self.xs[np.minimum(j + 1, self.n_steps)]
               + (t3 - t2) * self.h * self.dxs[np.minimum(j + 1, self.n_steps)])
        val = np.where(on_node, self.xs[np.clip(near, 0, self.n_steps)], val)
        return float(val) if val.ndim == 0 else val

    def dx_at(self, t):
        """Piecewise-linear dense value of dx on [t0, frontier]."""
        j, th, near, on_node = self._locate(t)
        val = (1.0 - th) * self.dxs[j] + th * self.dxs[np.minimum(j + 1, self.n_steps)]
        val = np.where(on_node, self.dxs[np.clip(near, 0, self.n_steps)], val)
        return float(val) if val.ndim == 0 else val


_ZERO_FN = None


def _zero_fn():
    global _ZERO_FN
    if _ZERO_FN is None:
        from .model import ScalarFn
        _ZERO_FN = ScalarFn.constant(0.0)
    return _ZERO_FN


def _field_names(eq):
    names = {P_A: "a", P_GLAG: "g_lag", P_PHI: "initial.phi",
             P_PSI: "initial.psi", P_F: "f"}
    for k in range(eq.m):
        names[P_TERMS + 2 * k] = f"terms[{k}].b"
        names[P_TERMS + 2 * k + 1] = f"terms[{k}].h_lag"
    return names


def _raise_for_status(eq, status, err_prog, err_t):
    names = _field_names(eq)
    where = names.get(err_prog, "equation")
    if status == ERR_SHORT_DELAY:
        raise ShortDelayError(where, err_t)
    if status == ERR_STATE_NONFINITE:
        raise SolutionOverflowError(err_t)
    err = ex.EvalDomainError(status, err_t)
    raise SolverError(f"{err} (while evaluating {where})") from err


def integrate(eq, init, f=None, *, t_end, h, sampling=None):
    """Integrate the problem from t0 to at least t_end with fixed step h.

    Requires validated data.  When the neutral coefficient is not identically
    zero the neutral lag must stay positive and at least h, so the delayed
    derivative always falls in already-computed history; state delays may
    vanish identically (the term is then evaluated on the RK stage value) but
    must not fall strictly inside a step.
    """
    if h <= 0.0:
        raise ValueError("step h must be positive")
    if t_end <= eq.t0:
        raise ValueError("t_end must exceed t0")
    violations = validate(eq, sampling)
    if violations:
        raise ValidationError(violations)

    neutral = not (eq.a.is_constant() and eq.a.constant_value() == 0.0)
    if neutral:
        if eq.g_lag.lag_inf <= 0.0:
            raise SolverError(
                "g_lag: explicit stepping needs the neutral lag bounded away "
                "from zero (lag_inf > 0)")
        if h > eq.g_lag.lag_inf * (1.0 + 1e-12):
            raise SolverError(
                f"g_lag: step h={h:.6g} exceeds the neutral lag lower bound "
                f"{eq.g_lag.lag_inf:.6g}")

    forcing = f is not None and not (
        ex.is_time_free(f.body) and f.constant_value() == 0.0)
    f_fn = f if f is not None else _zero_fn()

    progs = [eq.a.body, eq.g_lag.body, init.phi.body, init.psi.body, f_fn.body]
    for term in eq.terms:
        progs.append(term.b.body)
        progs.append(term.lag.body)
    ops, args, consts, starts = pack_programs(
        [ex.compile_expr(p).as_tuple() for p in progs])

    n = int(math.ceil((t_end - eq.t0) / h - 1e-9))
    xs = np.zeros(n + 1, dtype=np.float64)
    dxs = np.zeros(n + 1, dtype=np.float64)
    status, err_prog, err_t = _kernels.integrate_loop(
        int(neutral), int(forcing), eq.m, ops, args, consts, starts,
        float(eq.t0), float(init.x0), float(h), n, xs, dxs)
    if status != OK:
        _raise_for_status(eq, status, err_prog, err_t)
    return Trajectory(float(eq.t0), float(h), xs, dxs)


def history_eval(init, traj, t):
    """Joint (x, dx) at any time up to the trajectory frontier.

    Before t0 the declared history functions answer; at t0 the start value and
    the right derivative; afterwards the dense output.
    """
    eps = 1e-9 * max(1.0, abs(traj.frontier))
    if t > traj.frontier + eps:
        raise HistoryBoundsError(t, traj.frontier)
    if t < traj.t0:
        return init.phi(t), init.psi(t)
    return traj.x_at(min(t, traj.frontier)), traj.dx_at(min(t, traj.frontier))


def fundamental_solution(eq, s, t_end, h, sampling=None):
    """Response to a unit start at time s on zero history (zero forcing)."""
    if s < eq.t0:
        raise ValueError("fundamental start time must not precede t0")
    shifted = dataclasses.replace(eq, t0=float(s))
    unit = InitialData(_zero_fn(), _zero_fn(), 1.0)
    return integrate(shifted, unit, None, t_end=t_end, h=h, sampling=sampling)


def convergence_order(eq, init, f=None, *, t_end, h, sampling=None):
    """Observed order via Richardson comparison at t_end for h, h/2, h/4."""
    values = [
        integrate(eq, init, f, t_end=t_end, h=step, sampling=sampling).x_at(t_end)
        for step in (h, h / 2.0, h / 4.0)
    ]
    e1 = abs(values[0] - values[1])
    e2 = abs(values[1] - values[2])
    if e2 == 0.0:
        return math.inf
    return math.log2(e1 / e2)
