"""Benchmark the compiled kernels against the pure-Python fallback.

Times the two hot paths on the bundled constant-neutral-lag problem: the RK4
method-of-steps integration loop and norm-grid expression evaluation.

Usage: python benchmarks/bench_kernels.py [--t-end 10] [--h 1e-3] [--repeat 3]
"""

import argparse
import math
import statistics
import time

import numpy as np

from ndecert import expr as ex
from ndecert._kernels import get_impl
from ndecert._kernels.pack import pack_programs
from ndecert.envelope import decay_margin_expr
from ndecert.model import LagFn, NeutralEquation, ScalarFn, Term, default_sampling


def demo_problem():
    tau_sup = 1.0 / math.e + 0.1
    tau_inf = 1.0 / math.e - 0.1
    term = Term(ScalarFn.constant(1.0),
                LagFn.from_source("1/e + 0.1*sin(t)", tau_sup, tau_inf))
    return NeutralEquation(0.0, ScalarFn.constant(0.15), LagFn.constant(0.5),
                           (term,))


def bench(fn, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times), statistics.median(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--t-end", type=float, default=10.0)
    ap.add_argument("--h", type=float, default=1e-3)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    eq = demo_problem()
    phi = ScalarFn.from_source("cos(t)")
    psi = ScalarFn.from_source("sin(2*t) + 2")
    zero = ScalarFn.constant(0.0)
    progs = [eq.a.body, eq.g_lag.body, phi.body, psi.body, zero.body]
    for term in eq.terms:
        progs.append(term.b.body)
        progs.append(term.lag.body)
    ops, arg_idx, consts, starts = pack_programs(
        [ex.compile_expr(p).as_tuple() for p in progs])
    n = int(math.ceil(args.t_end / args.h))

    sampling = default_sampling(eq)
    grid = sampling.grid()
    margin_prog = ex.compile_expr(decay_margin_expr(eq, 0.1))

    backends = []
    for name in ("python", "compiled"):
        try:
            backends.append((name, get_impl(name)))
        except ImportError:
            print(f"[{name} backend unavailable, skipping]")

    results = {}
    for name, impl in backends:
        def run_integrate(impl=impl):
            xs = np.zeros(n + 1)
            dxs = np.zeros(n + 1)
            status, _, _ = impl.integrate_loop(
                1, 0, eq.m, ops, arg_idx, consts, starts,
                0.0, 1.0, args.h, n, xs, dxs)
            assert status == 0

        def run_grid(impl=impl):
            status, _, values = impl.eval_grid(
                margin_prog.ops, margin_prog.args, margin_prog.consts, grid)
            assert status == 0 and len(values) == len(grid)

        t_int = bench(run_integrate, args.repeat)
        t_grid = bench(run_grid, args.repeat)
        results[name] = (t_int[0], t_grid[0])
        print(f"{name:>9}: integrate[{n} steps] best {t_int[0]*1e3:9.2f} ms   "
              f"margin grid[{len(grid)} pts] best {t_grid[0]*1e6:9.1f} us")

    if len(results) == 2:
        s_int = results["python"][0] / results["compiled"][0]
        s_grid = results["python"][1] / results["compiled"][1]
        print(f"{'speedup':>9}: integrate x{s_int:.1f}   margin grid x{s_grid:.1f}")


if __name__ == "__main__":
    main()
