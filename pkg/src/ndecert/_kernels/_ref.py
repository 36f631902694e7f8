"""Pure-Python kernels: reference semantics for the compiled extension.

`eval_grid` is numpy-vectorized; `eval_scalar` and `integrate_loop` are plain
Python loops.  The compiled backend implements the same contracts and is
selected automatically when available (see ``ndecert._kernels``).
"""

import math

import numpy as np

from .opcodes import (
    ERR_DIV_ZERO,
    ERR_LOG_DOMAIN,
    ERR_NONFINITE,
    ERR_POW_DOMAIN,
    ERR_SHORT_DELAY,
    ERR_SQRT_DOMAIN,
    ERR_STATE_NONFINITE,
    OK,
    OP_ABS,
    OP_ADD,
    OP_CONST,
    OP_COS,
    OP_DIV,
    OP_EXP,
    OP_LOG,
    OP_MAX,
    OP_MIN,
    OP_MUL,
    OP_NEG,
    OP_POW,
    OP_SIN,
    OP_SQRT,
    OP_SUB,
    OP_T,
    P_A,
    P_F,
    P_GLAG,
    P_PHI,
    P_PSI,
    P_TERMS,
)

BACKEND_NAME = "python"


def eval_scalar(ops, args, consts, t):
    """Run one program at time ``t``.  Returns ``(status, value)``."""
    stack = []
    push = stack.append
    for i in range(len(ops)):
        op = ops[i]
        if op == OP_CONST:
            push(consts[args[i]])
            continue
        if op == OP_T:
            push(float(t))
            continue
        if op == OP_NEG:
            stack[-1] = -stack[-1]
            continue
        if op == OP_SIN:
            stack[-1] = math.sin(stack[-1])
            continue
        if op == OP_COS:
            stack[-1] = math.cos(stack[-1])
            continue
        if op == OP_EXP:
            try:
                stack[-1] = math.exp(stack[-1])
            except OverflowError:
                return ERR_NONFINITE, 0.0
            continue
        if op == OP_LOG:
            if stack[-1] <= 0.0:
                return ERR_LOG_DOMAIN, 0.0
            stack[-1] = math.log(stack[-1])
            continue
        if op == OP_SQRT:
            if stack[-1] < 0.0:
                return ERR_SQRT_DOMAIN, 0.0
            stack[-1] = math.sqrt(stack[-1])
            continue
        if op == OP_ABS:
            stack[-1] = abs(stack[-1])
            continue
        # binary operators
        y = stack.pop()
        x = stack[-1]
        if op == OP_ADD:
            x = x + y
        elif op == OP_SUB:
            x = x - y
        elif op == OP_MUL:
            x = x * y
        elif op == OP_DIV:
            if y == 0.0:
                return ERR_DIV_ZERO, 0.0
            x = x / y
        elif op == OP_POW:
            try:
                x = math.pow(x, y)
            except (ValueError, OverflowError):
                return ERR_POW_DOMAIN, 0.0
        elif op == OP_MIN:
            x = min(x, y)
        elif op == OP_MAX:
            x = max(x, y)
        if not math.isfinite(x):
            return ERR_NONFINITE, 0.0
        stack[-1] = x
    return OK, stack[0]


def eval_grid(ops, args, consts, ts):
    """Run one program over an array of times.

    Returns ``(status, t_err, values)``; on error ``values`` is None and
    ``t_err`` is the first offending time.
    """
    ts = np.asarray(ts, dtype=np.float64)
    stack = []
    push = stack.append
    with np.errstate(all="ignore"):
        for i in range(len(ops)):
            op = ops[i]
            if op == OP_CONST:
                push(np.full_like(ts, consts[args[i]]))
                continue
            if op == OP_T:
                push(ts.copy())
                continue
            if op == OP_NEG:
                stack[-1] = -stack[-1]
            elif op == OP_SIN:
                stack[-1] = np.sin(stack[-1])
            elif op == OP_COS:
                stack[-1] = np.cos(stack[-1])
            elif op == OP_EXP:
                stack[-1] = np.exp(stack[-1])
            elif op == OP_LOG:
                bad = stack[-1] <= 0.0
                if bad.any():
                    return ERR_LOG_DOMAIN, float(ts[int(np.argmax(bad))]), None
                stack[-1] = np.log(stack[-1])
            elif op == OP_SQRT:
                bad = stack[-1] < 0.0
                if bad.any():
                    return ERR_SQRT_DOMAIN, float(ts[int(np.argmax(bad))]), None
                stack[-1] = np.sqrt(stack[-1])
            elif op == OP_ABS:
                stack[-1] = np.abs(stack[-1])
            else:
                y = stack.pop()
                if op == OP_ADD:
                    stack[-1] = stack[-1] + y
                elif op == OP_SUB:
                    stack[-1] = stack[-1] - y
                elif op == OP_MUL:
                    stack[-1] = stack[-1] * y
                elif op == OP_DIV:
                    bad = y == 0.0
                    if bad.any():
                        return ERR_DIV_ZERO, float(ts[int(np.argmax(bad))]), None
                    stack[-1] = stack[-1] / y
                elif op == OP_POW:
                    r = np.power(stack[-1], y)
                    bad = np.isnan(r)
                    if bad.any():
                        return ERR_POW_DOMAIN, float(ts[int(np.argmax(bad))]), None
                    stack[-1] = r
                elif op == OP_MIN:
                    stack[-1] = np.minimum(stack[-1], y)
                elif op == OP_MAX:
                    stack[-1] = np.maximum(stack[-1], y)
            bad = ~np.isfinite(stack[-1])
            if bad.any():
                return ERR_NONFINITE, float(ts[int(np.argmax(bad))]), None
    return OK, 0.0, stack[0]


class _ProgSet:
    """Packed programs plus a scalar-eval helper (mirrors the C layout)."""

    def __init__(self, ops, args, consts, starts):
        self.ops = ops
        self.args = args
        self.consts = consts
        self.starts = starts

    def run(self, prog, t):
        s, e = self.starts[prog], self.starts[prog + 1]
        return eval_scalar(self.ops[s:e], self.args[s:e], self.consts, t)


def _hermite_x(u, t0, h, xs, dxs, n_complete):
    """Cubic-Hermite value of x at u in [t0, frontier]."""
    if n_complete < 2:
        return xs[0]
    j = int(math.floor((u - t0) / h))
    if j > n_complete - 2:
        j = n_complete - 2
    if j < 0:
        j = 0
    th = (u - (t0 + j * h)) / h
    if th < 0.0:
        th = 0.0
    elif th > 1.0:
        th = 1.0
    t2 = th * th
    t3 = t2 * th
    return (
        (2.0 * t3 - 3.0 * t2 + 1.0) * xs[j]
        + (t3 - 2.0 * t2 + th) * h * dxs[j]
        + (-2.0 * t3 + 3.0 * t2) * xs[j + 1]
        + (t3 - t2) * h * dxs[j + 1]
    )


def _linear_dx(u, t0, h, dxs, n_complete):
    """Piecewise-linear value of dx at u in [t0, frontier]."""
    if n_complete < 2:
        return dxs[0]
    j = int(math.floor((u - t0) / h))
    if j > n_complete - 2:
        j = n_complete - 2
    if j < 0:
        j = 0
    th = (u - (t0 + j * h)) / h
    if th < 0.0:
        th = 0.0
    elif th > 1.0:
        th = 1.0
    return (1.0 - th) * dxs[j] + th * dxs[j + 1]


def integrate_loop(has_neutral, has_forcing, m, ops, args, consts, starts,
                   t0, x0, h, n_steps, xs, dxs):
    """Fixed-step RK4 method-of-steps advance.

    ``xs``/``dxs`` are preallocated arrays of length ``n_steps + 1``; node
    derivatives are recomputed from the equation after every step.  Returns
    ``(status, err_prog, err_t)`` where err_prog indexes the offending
    program (-1 when not applicable) and err_t locates the failure.
    """
    ps = _ProgSet(ops, args, consts, starts)
    n_complete = 1
    state = {"err_prog": -1, "err_t": 0.0}

    def fail(code, prog, t):
        state["err_prog"] = prog
        state["err_t"] = t
        return code

    def hist_x(u):
        # value of x at u <= frontier; pre-start history comes from phi
        if u < t0:
            st, v = ps.run(P_PHI, u)
            if st != OK:
                return fail(st, P_PHI, u), 0.0
            return OK, v
        return OK, _hermite_x(u, t0, h, xs, dxs, n_complete)

    def hist_dx(u):
        if u < t0:
            st, v = ps.run(P_PSI, u)
            if st != OK:
                return fail(st, P_PSI, u), 0.0
            return OK, v
        return OK, _linear_dx(u, t0, h, dxs, n_complete)

    def rhs(s, y, frontier_t):
        # dx(s) = a(s) dx(g(s)) - sum_k b_k(s) x(h_k(s)) + f(s)
        eps = 1e-9 * max(1.0, abs(frontier_t))
        eps0 = 1e-12 * max(1.0, abs(s))
        val = 0.0
        if has_neutral:
            st, av = ps.run(P_A, s)
            if st != OK:
                return fail(st, P_A, s), 0.0
            st, lag = ps.run(P_GLAG, s)
            if st != OK:
                return fail(st, P_GLAG, s), 0.0
            u = s - lag
            if u > frontier_t + eps:
                return fail(ERR_SHORT_DELAY, P_GLAG, u), 0.0
            st, dv = hist_dx(u)
            if st != OK:
                return st, 0.0
            val += av * dv
        for k in range(m):
            pb = P_TERMS + 2 * k
            st, bv = ps.run(pb, s)
            if st != OK:
                return fail(st, pb, s), 0.0
            st, lag = ps.run(pb + 1, s)
            if st != OK:
                return fail(st, pb + 1, s), 0.0
            u = s - lag
            if u <= frontier_t + eps:
                st, xv = hist_x(u)
                if st != OK:
                    return st, 0.0
            elif abs(u - s) <= eps0:
                xv = y  # zero-lag term: use the current stage value
            else:
                return fail(ERR_SHORT_DELAY, pb + 1, u), 0.0
            val -= bv * xv
        if has_forcing:
            st, fv = ps.run(P_F, s)
            if st != OK:
                return fail(st, P_F, s), 0.0
            val += fv
        if not math.isfinite(val):
            return fail(ERR_NONFINITE, -1, s), 0.0
        return OK, val

    xs[0] = x0
    st, d0 = rhs(t0, x0, t0)
    if st != OK:
        return st, state["err_prog"], state["err_t"]
    dxs[0] = d0

    for i in range(n_steps):
        ti = t0 + i * h
        frontier = ti
        k1 = dxs[i]
        st, k2 = rhs(ti + 0.5 * h, xs[i] + 0.5 * h * k1, frontier)
        if st != OK:
            return st, state["err_prog"], state["err_t"]
        st, k3 = rhs(ti + 0.5 * h, xs[i] + 0.5 * h * k2, frontier)
        if st != OK:
            return st, state["err_prog"], state["err_t"]
        st, k4 = rhs(ti + h, xs[i] + h * k3, frontier)
        if st != OK:
            return st, state["err_prog"], state["err_t"]
        xn = xs[i] + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not math.isfinite(xn):
            return ERR_STATE_NONFINITE, -1, ti + h
        xs[i + 1] = xn
        n_complete = i + 2
        st, dn = rhs(ti + h, xn, ti + h)
        if st != OK:
            return st, state["err_prog"], state["err_t"]
        dxs[i + 1] = dn

    return OK, -1, 0.0
