"""Config-driven command line: check | envelope | solve | verify | region.

Exit codes: 0 = certified / pass, 2 = inconclusive / infeasible / dominance
fail, 1 = input or runtime error.  CSV output is RFC-4180 style with 17
significant digits, so repeated runs on the same config are byte-identical.
"""

import copy
import csv
import math
import sys

import click
import numpy as np

from . import expr as ex
from .config import ConfigError, build_problem, load_config, load_raw, set_param
from .criteria import CRITERION_IDS, aggregate_delay_lhs, run_all
from .envelope import InfeasibleRateError, certificate, optimize_rate
from .model import Sampling, ValidationError
from .solver import SolverError, integrate

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INCONCLUSIVE = 2

_INPUT_ERRORS = (ConfigError, ValidationError, SolverError,
                 ex.EvalDomainError, ex.ParseError, OSError, ValueError)


def _fmt(x):
    return format(float(x), ".17g")


def _open_out(out):
    if out is None:
        return sys.stdout, False
    return open(out, "w", newline=""), True


def _write_csv(out, header, rows):
    fh, close = _open_out(out)
    try:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow(row)
    finally:
        if close:
            fh.close()


def _sampling_override(problem, window, step):
    base = problem.sampling
    if window is None and step is None:
        return base
    t0 = problem.equation.t0
    width = window if window is not None else base.t_hi - base.t_lo
    eff_step = step if step is not None else 1e-3 * width
    return Sampling(t0, t0 + width, eff_step)


def _fail(err):
    click.echo(f"error: {err}", err=True)
    sys.exit(EXIT_ERROR)


@click.group()
def main():
    """Stability certificates and simulation for scalar linear neutral
    delay differential equations."""


@main.command()
@click.argument("config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--window", type=float, default=None,
              help="Norm-estimation window length (from t0).")
@click.option("--step", type=float, default=None,
              help="Norm-estimation grid step.")
def check(config_path, window, step):
    """Evaluate every stability criterion and print a verdict table."""
    try:
        problem = load_config(config_path)
        sampling = _sampling_override(problem, window, step)
        report = run_all(problem.equation, sampling)
    except _INPUT_ERRORS as err:
        _fail(err)
    click.echo(f"{'criterion':<24}{'applicable':<12}{'holds':<7}"
               f"{'lhs':<14}{'threshold':<14}deciding clause")
    for v in report.verdicts:
        lhs = f"{v.lhs:.6g}" if not math.isnan(v.lhs) else "-"
        thr = f"{v.threshold:.6g}" if not math.isnan(v.threshold) else "-"
        click.echo(f"{v.criterion_id:<24}{('yes' if v.applicable else 'no'):<12}"
                   f"{('yes' if v.holds else 'no'):<7}{lhs:<14}{thr:<14}"
                   f"{v.deciding}")
        if v.intermediates:
            pairs = "  ".join(f"{k}={val:.6g}" for k, val in
                              sorted(v.intermediates.items()))
            click.echo(f"    {pairs}")
    if report.overall:
        held = ", ".join(v.criterion_id for v in report.verdicts if v.holds)
        click.echo(f"overall: exponentially stable (via {held})")
        sys.exit(EXIT_OK)
    click.echo("overall: inconclusive (no criterion holds)")
    sys.exit(EXIT_INCONCLUSIVE)


@main.command()
@click.argument("config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--lambda", "lam", type=float, default=None,
              help="Certify at this decay rate instead of optimizing.")
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Write the envelope curve (t, envelope) to this CSV file.")
@click.option("--window", type=float, default=None)
@click.option("--step", type=float, default=None)
def envelope(config_path, lam, out, window, step):
    """Build an exponential envelope certificate."""
    try:
        problem = load_config(config_path)
        sampling = _sampling_override(problem, window, step)
        eq = problem.equation
        if lam is None:
            lam = optimize_rate(eq, problem.numerics.lambda_hi,
                                problem.numerics.tol, sampling)
            if lam is None:
                click.echo("no certifiable decay rate found in "
                           f"(0, {problem.numerics.lambda_hi}]")
                sys.exit(EXIT_INCONCLUSIVE)
        try:
            cert = certificate(eq, lam, problem.initial,
                               problem.f_bound or 0.0, sampling)
        except InfeasibleRateError as err:
            click.echo(f"infeasible: {err}")
            sys.exit(EXIT_INCONCLUSIVE)
    except _INPUT_ERRORS as err:
        _fail(err)
    click.echo(f"decay rate            {cert.decay_rate:.10g}")
    click.echo(f"margin (inf p)        {cert.margin:.10g}")
    click.echo(f"contraction M1        {cert.contraction:.10g}")
    click.echo(f"kernel bound M0       {cert.kernel_bound:.10g}")
    click.echo(f"envelope constant C   {cert.init_constant:.10g}")
    click.echo(f"forcing gain          {cert.forcing_gain:.10g}")
    click.echo("bracket components (multiplied by M0):")
    for name, value in cert.components.items():
        click.echo(f"  {name:<18}{value:.10g}")
    if out is not None:
        h = problem.numerics.solver_h
        n = int(math.ceil((problem.numerics.t_end - eq.t0) / h - 1e-9))
        ts = eq.t0 + np.arange(n + 1) * h
        env = cert.bound_at(ts)
        _write_csv(out, ["t", "envelope"],
                   ([_fmt(t), _fmt(v)] for t, v in zip(ts, env)))
    sys.exit(EXIT_OK)


@main.command()
@click.argument("config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="CSV destination (defaults to stdout).")
@click.option("--h", "h", type=float, default=None, help="Step size override.")
@click.option("--t-end", "t_end", type=float, default=None,
              help="Integration end time override.")
def solve(config_path, out, h, t_end):
    """Integrate the problem and emit the trajectory as CSV (t, x, dx)."""
    try:
        problem = load_config(config_path)
        h = h if h is not None else problem.numerics.solver_h
        t_end = t_end if t_end is not None else problem.numerics.t_end
        traj = integrate(problem.equation, problem.initial, problem.forcing,
                         t_end=t_end, h=h, sampling=problem.sampling)
    except _INPUT_ERRORS as err:
        _fail(err)
    nodes = traj.nodes
    _write_csv(out, ["t", "x", "dx"],
               ([_fmt(t), _fmt(x), _fmt(d)]
                for t, x, d in zip(nodes, traj.xs, traj.dxs)))
    sys.exit(EXIT_OK)


@main.command()
@click.argument("config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--lambda", "lam", type=float, default=None,
              help="Replay a given decay rate instead of optimizing.")
@click.option("--C", "c_override", type=float, default=None,
              help="Replay a given envelope constant.")
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Write combined CSV (t, x, envelope) to this file.")
@click.option("--h", "h", type=float, default=None)
@click.option("--t-end", "t_end", type=float, default=None)
@click.option("--window", type=float, default=None)
@click.option("--step", type=float, default=None)
def verify(config_path, lam, c_override, out, h, t_end, window, step):
    """Integrate and check that the envelope dominates the trajectory."""
    try:
        problem = load_config(config_path)
        sampling = _sampling_override(problem, window, step)
        eq = problem.equation
        if lam is None:
            lam = optimize_rate(eq, problem.numerics.lambda_hi,
                                problem.numerics.tol, sampling)
            if lam is None:
                click.echo("no certifiable decay rate found")
                sys.exit(EXIT_INCONCLUSIVE)
        try:
            cert = certificate(eq, lam, problem.initial,
                               problem.f_bound or 0.0, sampling)
        except InfeasibleRateError as err:
            click.echo(f"infeasible: {err}")
            sys.exit(EXIT_INCONCLUSIVE)
        big_c = c_override if c_override is not None else cert.init_constant
        h = h if h is not None else problem.numerics.solver_h
        t_end = t_end if t_end is not None else problem.numerics.t_end
        traj = integrate(eq, problem.initial, problem.forcing,
                         t_end=t_end, h=h, sampling=sampling)
        nodes = traj.nodes
        env = big_c * np.exp(-lam * (nodes - eq.t0))
        forcing_active = not (ex.is_time_free(problem.forcing.body)
                              and problem.forcing.constant_value() == 0.0)
        if forcing_active:
            f_abs = np.abs(ex.evaluate_grid(problem.forcing.body, nodes))
            env = env + cert.forcing_gain * np.maximum.accumulate(f_abs)
    except _INPUT_ERRORS as err:
        _fail(err)
    absx = np.abs(traj.xs)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(env > 0.0, absx / np.where(env > 0.0, env, 1.0),
                          np.where(absx > 0.0, np.inf, 0.0))
    worst = int(np.argmax(ratios))
    ratio = float(ratios[worst])
    ok = ratio <= 1.0
    click.echo(f"decay rate            {lam:.10g}")
    click.echo(f"envelope constant C   {big_c:.10g}")
    click.echo(f"max dominance ratio   {ratio:.10g} at t={nodes[worst]:.10g}")
    click.echo("dominance: PASS" if ok else "dominance: FAIL")
    if out is not None:
        _write_csv(out, ["t", "x", "envelope"],
                   ([_fmt(t), _fmt(x), _fmt(e)]
                    for t, x, e in zip(nodes, traj.xs, env)))
    sys.exit(EXIT_OK if ok else EXIT_INCONCLUSIVE)


@main.command()
@click.argument("config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--param", required=True,
              help="Dotted path of the swept scalar knob, e.g. equation.g_lag.")
@click.option("--from", "start", type=float, required=True)
@click.option("--to", "stop", type=float, required=True)
@click.option("--points", type=int, required=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="CSV destination (defaults to stdout).")
def region(config_path, param, start, stop, points, out):
    """Sweep one parameter and tabulate criterion verdicts per value."""
    if points < 1:
        _fail("points must be >= 1")
    try:
        raw = load_raw(config_path)
        values = (np.linspace(start, stop, points) if points > 1
                  else np.asarray([start]))
        rows = []
        for value in values:
            doc = copy.deepcopy(raw)
            set_param(doc, param, float(value))
            problem = build_problem(doc)
            row = [_fmt(value)]
            try:
                report = run_all(problem.equation, problem.sampling)
            except ValidationError:
                row += ["na"] * len(CRITERION_IDS) + ["", ""]
                rows.append(row)
                continue
            by_id = {v.criterion_id: v for v in report.verdicts}
            for cid in CRITERION_IDS:
                v = by_id[cid]
                row.append("true" if v.holds else
                           ("false" if v.applicable else "na"))
            lhs = aggregate_delay_lhs(problem.equation, problem.sampling)
            row.append(_fmt(lhs) if not math.isnan(lhs) else "")
            best = optimize_rate(problem.equation, problem.numerics.lambda_hi,
                                 problem.numerics.tol, problem.sampling)
            row.append(_fmt(best) if best is not None else "")
            rows.append(row)
    except _INPUT_ERRORS as err:
        _fail(err)
    header = (["param"] + [cid.replace("-", "_") for cid in CRITERION_IDS]
              + ["aggregate_delay_lhs", "lambda_star"])
    _write_csv(out, header, rows)
    sys.exit(EXIT_OK)


if __name__ == "__main__":
    main()
