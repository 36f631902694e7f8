# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: expression bytecode interpreter and the RK4
method-of-steps integration loop.  Reference semantics live in ``_ref.py``."""

import numpy as np

cimport numpy as cnp
from libc.math cimport cos, exp, fabs, floor, isfinite, isnan, log, pow, sin, sqrt

cnp.import_array()

BACKEND_NAME = "compiled"

cdef enum:
    OP_CONST = 0
    OP_T = 1
    OP_ADD = 2
    OP_SUB = 3
    OP_MUL = 4
    OP_DIV = 5
    OP_POW = 6
    OP_NEG = 7
    OP_SIN = 8
    OP_COS = 9
    OP_EXP = 10
    OP_LOG = 11
    OP_SQRT = 12
    OP_ABS = 13
    OP_MIN = 14
    OP_MAX = 15

cdef enum:
    OK = 0
    ERR_DIV_ZERO = 1
    ERR_LOG_DOMAIN = 2
    ERR_SQRT_DOMAIN = 3
    ERR_POW_DOMAIN = 4
    ERR_NONFINITE = 5
    ERR_SHORT_DELAY = 10
    ERR_STATE_NONFINITE = 11

cdef enum:
    P_A = 0
    P_GLAG = 1
    P_PHI = 2
    P_PSI = 3
    P_F = 4
    P_TERMS = 5

# keep the C enums aligned with the Python-side constants
from . import opcodes as _oc
assert (_oc.OP_CONST, _oc.OP_T, _oc.OP_ADD, _oc.OP_SUB, _oc.OP_MUL, _oc.OP_DIV,
        _oc.OP_POW, _oc.OP_NEG, _oc.OP_SIN, _oc.OP_COS, _oc.OP_EXP, _oc.OP_LOG,
        _oc.OP_SQRT, _oc.OP_ABS, _oc.OP_MIN, _oc.OP_MAX) == tuple(range(16))
assert (_oc.ERR_DIV_ZERO, _oc.ERR_LOG_DOMAIN, _oc.ERR_SQRT_DOMAIN,
        _oc.ERR_POW_DOMAIN, _oc.ERR_NONFINITE) == (1, 2, 3, 4, 5)
assert (_oc.ERR_SHORT_DELAY, _oc.ERR_STATE_NONFINITE) == (10, 11)
assert (_oc.P_A, _oc.P_GLAG, _oc.P_PHI, _oc.P_PSI, _oc.P_F, _oc.P_TERMS) == \
    (0, 1, 2, 3, 4, 5)

DEF STACK_CAP = 64


cdef int _prog_eval(const cnp.int32_t* ops, const cnp.int32_t* args, int n_ops,
                    const double* consts, double t, double* out) nogil:
    cdef double stack[STACK_CAP]
    cdef int i, sp = 0
    cdef int op
    cdef double x, y
    for i in range(n_ops):
        op = ops[i]
        if op == OP_CONST:
            stack[sp] = consts[args[i]]
            sp += 1
            continue
        if op == OP_T:
            stack[sp] = t
            sp += 1
            continue
        if op == OP_NEG:
            stack[sp - 1] = -stack[sp - 1]
            continue
        if op == OP_SIN:
            stack[sp - 1] = sin(stack[sp - 1])
            continue
        if op == OP_COS:
            stack[sp - 1] = cos(stack[sp - 1])
            continue
        if op == OP_EXP:
            x = exp(stack[sp - 1])
            if not isfinite(x):
                return ERR_NONFINITE
            stack[sp - 1] = x
            continue
        if op == OP_LOG:
            if stack[sp - 1] <= 0.0:
                return ERR_LOG_DOMAIN
            stack[sp - 1] = log(stack[sp - 1])
            continue
        if op == OP_SQRT:
            if stack[sp - 1] < 0.0:
                return ERR_SQRT_DOMAIN
            stack[sp - 1] = sqrt(stack[sp - 1])
            continue
        if op == OP_ABS:
            stack[sp - 1] = fabs(stack[sp - 1])
            continue
        sp -= 1
        y = stack[sp]
        x = stack[sp - 1]
        if op == OP_ADD:
            x = x + y
        elif op == OP_SUB:
            x = x - y
        elif op == OP_MUL:
            x = x * y
        elif op == OP_DIV:
            if y == 0.0:
                return ERR_DIV_ZERO
            x = x / y
        elif op == OP_POW:
            x = pow(x, y)
            if isnan(x):
                return ERR_POW_DOMAIN
        elif op == OP_MIN:
            x = x if x < y else y
        elif op == OP_MAX:
            x = x if x > y else y
        if not isfinite(x):
            return ERR_NONFINITE
        stack[sp - 1] = x
    out[0] = stack[0]
    return OK


def eval_scalar(const cnp.int32_t[::1] ops, const cnp.int32_t[::1] args,
                const cnp.float64_t[::1] consts, double t):
    """Run one program at time ``t``.  Returns ``(status, value)``."""
    cdef double out = 0.0
    cdef int st
    cdef const double* cp = NULL
    if consts.shape[0] > 0:
        cp = &consts[0]
    st = _prog_eval(&ops[0], &args[0], <int>ops.shape[0], cp, t, &out)
    if st != OK:
        return st, 0.0
    return OK, out


def eval_grid(const cnp.int32_t[::1] ops, const cnp.int32_t[::1] args,
              const cnp.float64_t[::1] consts, const cnp.float64_t[::1] ts):
    """Run one program over an array of times -> (status, t_err, values)."""
    cdef Py_ssize_t n = ts.shape[0]
    out_arr = np.empty(n, dtype=np.float64)
    cdef cnp.float64_t[::1] out = out_arr
    cdef Py_ssize_t i
    cdef int st = OK
    cdef double v = 0.0
    cdef double t_err = 0.0
    cdef const double* cp = NULL
    if consts.shape[0] > 0:
        cp = &consts[0]
    with nogil:
        for i in range(n):
            st = _prog_eval(&ops[0], &args[0], <int>ops.shape[0], cp, ts[i], &v)
            if st != OK:
                t_err = ts[i]
                break
            out[i] = v
    if st != OK:
        return st, t_err, None
    return OK, 0.0, out_arr


cdef struct ErrInfo:
    int prog
    double t


cdef double _hermite_x(double u, double t0, double h, const double* xs,
                       const double* dxs, long n_complete) nogil:
    cdef long j
    cdef double th, t2, t3
    if n_complete < 2:
        return xs[0]
    j = <long>floor((u - t0) / h)
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
    return ((2.0 * t3 - 3.0 * t2 + 1.0) * xs[j]
            + (t3 - 2.0 * t2 + th) * h * dxs[j]
            + (-2.0 * t3 + 3.0 * t2) * xs[j + 1]
            + (t3 - t2) * h * dxs[j + 1])


cdef double _linear_dx(double u, double t0, double h, const double* dxs,
                       long n_complete) nogil:
    cdef long j
    cdef double th
    if n_complete < 2:
        return dxs[0]
    j = <long>floor((u - t0) / h)
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


cdef int _rhs(int has_neutral, int has_forcing, int m,
              const cnp.int32_t* ops, const cnp.int32_t* args,
              const double* consts, const cnp.int32_t* starts,
              double s, double y, double frontier_t,
              double t0, double h, const double* xs, const double* dxs,
              long n_complete, double* out, ErrInfo* err) nogil:
    cdef double eps = 1e-9 * (1.0 if fabs(frontier_t) < 1.0 else fabs(frontier_t))
    cdef double eps0 = 1e-12 * (1.0 if fabs(s) < 1.0 else fabs(s))
    cdef double val = 0.0
    cdef double av, lag, u, dv, bv, xv, fv
    cdef int st, k, pb
    if has_neutral:
        st = _prog_eval(ops + starts[P_A], args + starts[P_A],
                        starts[P_A + 1] - starts[P_A], consts, s, &av)
        if st != OK:
            err.prog = P_A; err.t = s
            return st
        st = _prog_eval(ops + starts[P_GLAG], args + starts[P_GLAG],
                        starts[P_GLAG + 1] - starts[P_GLAG], consts, s, &lag)
        if st != OK:
            err.prog = P_GLAG; err.t = s
            return st
        u = s - lag
        if u > frontier_t + eps:
            err.prog = P_GLAG; err.t = u
            return ERR_SHORT_DELAY
        if u < t0:
            st = _prog_eval(ops + starts[P_PSI], args + starts[P_PSI],
                            starts[P_PSI + 1] - starts[P_PSI], consts, u, &dv)
            if st != OK:
                err.prog = P_PSI; err.t = u
                return st
        else:
            dv = _linear_dx(u, t0, h, dxs, n_complete)
        val += av * dv
    for k in range(m):
        pb = P_TERMS + 2 * k
        st = _prog_eval(ops + starts[pb], args + starts[pb],
                        starts[pb + 1] - starts[pb], consts, s, &bv)
        if st != OK:
            err.prog = pb; err.t = s
            return st
        st = _prog_eval(ops + starts[pb + 1], args + starts[pb + 1],
                        starts[pb + 2] - starts[pb + 1], consts, s, &lag)
        if st != OK:
            err.prog = pb + 1; err.t = s
            return st
        u = s - lag
        if u <= frontier_t + eps:
            if u < t0:
                st = _prog_eval(ops + starts[P_PHI], args + starts[P_PHI],
                                starts[P_PHI + 1] - starts[P_PHI], consts, u, &xv)
                if st != OK:
                    err.prog = P_PHI; err.t = u
                    return st
            else:
                xv = _hermite_x(u, t0, h, xs, dxs, n_complete)
        elif fabs(u - s) <= eps0:
            xv = y  # zero-lag term: use the current stage value
        else:
            err.prog = pb + 1; err.t = u
            return ERR_SHORT_DELAY
        val -= bv * xv
    if has_forcing:
        st = _prog_eval(ops + starts[P_F], args + starts[P_F],
                        starts[P_F + 1] - starts[P_F], consts, s, &fv)
        if st != OK:
            err.prog = P_F; err.t = s
            return st
        val += fv
    if not isfinite(val):
        err.prog = -1; err.t = s
        return ERR_NONFINITE
    out[0] = val
    return OK


def integrate_loop(int has_neutral, int has_forcing, int m,
                   const cnp.int32_t[::1] ops, const cnp.int32_t[::1] args,
                   const cnp.float64_t[::1] consts, const cnp.int32_t[::1] starts,
                   double t0, double x0, double h, long n_steps,
                   cnp.float64_t[::1] xs, cnp.float64_t[::1] dxs):
    """Fixed-step RK4 method-of-steps advance (see _ref.integrate_loop)."""
    cdef ErrInfo err
    err.prog = -1
    err.t = 0.0
    cdef const double* cp = NULL
    if consts.shape[0] > 0:
        cp = &consts[0]
    cdef const cnp.int32_t* ops_p = &ops[0]
    cdef const cnp.int32_t* args_p = &args[0]
    cdef const cnp.int32_t* starts_p = &starts[0]
    cdef double* xs_p = &xs[0]
    cdef double* dxs_p = &dxs[0]
    cdef long n_complete = 1
    cdef long i
    cdef int st = OK
    cdef double ti, k1, k2, k3, k4, xn, dn

    with nogil:
        xs_p[0] = x0
        st = _rhs(has_neutral, has_forcing, m, ops_p, args_p, cp, starts_p,
                  t0, x0, t0, t0, h, xs_p, dxs_p, n_complete, &dn, &err)
        if st == OK:
            dxs_p[0] = dn
            for i in range(n_steps):
                ti = t0 + i * h
                k1 = dxs_p[i]
                st = _rhs(has_neutral, has_forcing, m, ops_p, args_p, cp,
                          starts_p, ti + 0.5 * h, xs_p[i] + 0.5 * h * k1, ti,
                          t0, h, xs_p, dxs_p, n_complete, &k2, &err)
                if st != OK:
                    break
                st = _rhs(has_neutral, has_forcing, m, ops_p, args_p, cp,
                          starts_p, ti + 0.5 * h, xs_p[i] + 0.5 * h * k2, ti,
                          t0, h, xs_p, dxs_p, n_complete, &k3, &err)
                if st != OK:
                    break
                st = _rhs(has_neutral, has_forcing, m, ops_p, args_p, cp,
                          starts_p, ti + h, xs_p[i] + h * k3, ti,
                          t0, h, xs_p, dxs_p, n_complete, &k4, &err)
                if st != OK:
                    break
                xn = xs_p[i] + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
                if not isfinite(xn):
                    st = ERR_STATE_NONFINITE
                    err.prog = -1
                    err.t = ti + h
                    break
                xs_p[i + 1] = xn
                n_complete = i + 2
                st = _rhs(has_neutral, has_forcing, m, ops_p, args_p, cp,
                          starts_p, ti + h, xn, ti + h,
                          t0, h, xs_p, dxs_p, n_complete, &dn, &err)
                if st != OK:
                    break
                dxs_p[i + 1] = dn

    if st != OK:
        return st, err.prog, err.t
    return OK, -1, 0.0
