"""Problem declaration files: sectioned key-value (TOML) -> model objects.

Layout::

    [equation]            # t0, a, g_lag (+ optional *_sup / *_inf bounds)
    [[equation.term]]     # one block per delayed term: b, h_lag (+ bounds)
    [initial]             # phi, psi, x0
    [forcing]             # f, f_bound
    [numerics]            # window, norm_step, solver_h, t_end, lambda_hi, tol

Coefficients, lags and history functions are expression strings in the
variable ``t``; plain numbers declare constants (their bounds are then exact).
Scalar knobs (``*_sup``, ``*_inf``, ``x0`` ...) accept numbers or constant
expressions such as ``"1/e + 0.1"``.
"""

import math
import re
from dataclasses import dataclass
from typing import Optional

import tomli

from . import expr as ex
from .model import (
    InitialData,
    LagFn,
    NeutralEquation,
    Sampling,
    ScalarFn,
    Term,
    check_initial_match,
)

__all__ = ["ConfigError", "Numerics", "ProblemConfig", "load_config",
           "load_config_text", "build_problem", "set_param"]


class ConfigError(ValueError):
    def __init__(self, where, message):
        super().__init__(f"{where}: {message}")
        self.where = where


@dataclass(frozen=True)
class Numerics:
    solver_h: float = 1e-3
    t_end: float = 60.0
    lambda_hi: float = 2.0
    tol: float = 1e-6
    window: Optional[float] = None      # norm window length (from t0)
    norm_step: Optional[float] = None


@dataclass(frozen=True)
class ProblemConfig:
    equation: NeutralEquation
    initial: InitialData
    forcing: ScalarFn
    f_bound: Optional[float]
    numerics: Numerics
    sampling: Sampling


def _scalar(value, where):
    if isinstance(value, bool):
        raise ConfigError(where, "expected a number")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        try:
            tree = ex.parse(value)
        except ex.ParseError as err:
            raise ConfigError(where, str(err)) from err
        if not ex.is_time_free(tree):
            raise ConfigError(where, "scalar value must not depend on t")
        return ex.evaluate(tree, 0.0)
    raise ConfigError(where, f"expected a number or expression string, "
                             f"got {type(value).__name__}")


def _opt_scalar(section, key, where):
    if key not in section:
        return None
    return _scalar(section.pop(key), f"{where}.{key}")


def _function(value, where, sup=None, inf=None):
    if isinstance(value, bool):
        raise ConfigError(where, "expected a number or expression string")
    if isinstance(value, (int, float)):
        return ScalarFn.constant(float(value))
    if isinstance(value, str):
        try:
            return ScalarFn.from_source(value, sup, inf)
        except ex.ParseError as err:
            raise ConfigError(where, str(err)) from err
    raise ConfigError(where, f"expected a number or expression string, "
                             f"got {type(value).__name__}")


def _lag(value, where, sup, inf, bootstrap):
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        lag = LagFn.constant(float(value))
        if sup is not None or inf is not None:
            lag = LagFn(lag.body, sup if sup is not None else lag.lag_sup,
                        inf if inf is not None else lag.lag_inf)
        return lag
    if isinstance(value, str):
        try:
            return LagFn.from_source(value, sup, inf, bootstrap)
        except ex.ParseError as err:
            raise ConfigError(where, str(err)) from err
    raise ConfigError(where, f"expected a number or expression string, "
                             f"got {type(value).__name__}")


def _require(section, key, where):
    if key not in section:
        raise ConfigError(where, f"missing required key {key!r}")
    return section.pop(key)


def _reject_unknown(section, where):
    if section:
        raise ConfigError(where, f"unknown key(s): {', '.join(sorted(section))}")


def build_problem(doc):
    """Turn a parsed configuration document into a ProblemConfig."""
    doc = dict(doc)
    eq_sec = dict(doc.pop("equation", None) or {})
    if not eq_sec:
        raise ConfigError("equation", "missing [equation] section")
    init_sec = dict(doc.pop("initial", None) or {})
    force_sec = dict(doc.pop("forcing", None) or {})
    num_sec = dict(doc.pop("numerics", None) or {})
    _reject_unknown(doc, "config")

    t0 = _scalar(eq_sec.pop("t0", 0.0), "equation.t0")
    # lags may need sampled bounds before the proper window is known
    bootstrap = Sampling(t0, t0 + 40.0 * math.pi, 0.04 * math.pi)

    a = _function(_require(eq_sec, "a", "equation"), "equation.a",
                  _opt_scalar(eq_sec, "a_sup", "equation"),
                  _opt_scalar(eq_sec, "a_inf", "equation"))
    g_lag = _lag(_require(eq_sec, "g_lag", "equation"), "equation.g_lag",
                 _opt_scalar(eq_sec, "g_lag_sup", "equation"),
                 _opt_scalar(eq_sec, "g_lag_inf", "equation"), bootstrap)

    term_blocks = eq_sec.pop("term", None)
    if not term_blocks:
        raise ConfigError("equation.term", "at least one [[equation.term]] "
                                           "block is required")
    terms = []
    for k, block in enumerate(term_blocks):
        block = dict(block)
        where = f"equation.term[{k}]"
        b = _function(_require(block, "b", where), f"{where}.b",
                      _opt_scalar(block, "b_sup", where),
                      _opt_scalar(block, "b_inf", where))
        lag = _lag(_require(block, "h_lag", where), f"{where}.h_lag",
                   _opt_scalar(block, "h_lag_sup", where),
                   _opt_scalar(block, "h_lag_inf", where), bootstrap)
        _reject_unknown(block, where)
        terms.append(Term(b, lag))
    _reject_unknown(eq_sec, "equation")
    equation = NeutralEquation(t0, a, g_lag, tuple(terms))

    phi = _function(init_sec.pop("phi", 0.0), "initial.phi")
    psi = _function(init_sec.pop("psi", 0.0), "initial.psi")
    x0 = init_sec.pop("x0", None)
    _reject_unknown(init_sec, "initial")
    if x0 is None:
        x0 = phi(t0)
    else:
        x0 = _scalar(x0, "initial.x0")
    init = InitialData(phi, psi, float(x0))
    mismatches = check_initial_match(init, t0, tol=1e-6)
    if mismatches:
        raise ConfigError("initial.x0", mismatches[0].message)

    forcing = _function(force_sec.pop("f", 0.0), "forcing.f")
    f_bound = _opt_scalar(force_sec, "f_bound", "forcing")
    _reject_unknown(force_sec, "forcing")

    numerics = Numerics(
        solver_h=_opt_scalar(num_sec, "solver_h", "numerics") or 1e-3,
        t_end=_opt_scalar(num_sec, "t_end", "numerics") or 60.0,
        lambda_hi=_opt_scalar(num_sec, "lambda_hi", "numerics") or 2.0,
        tol=_opt_scalar(num_sec, "tol", "numerics") or 1e-6,
        window=_opt_scalar(num_sec, "window", "numerics"),
        norm_step=_opt_scalar(num_sec, "norm_step", "numerics"),
    )
    _reject_unknown(num_sec, "numerics")

    width = numerics.window
    if width is None:
        width = 20.0 * max(g_lag.lag_sup, *(t.lag.lag_sup for t in terms),
                           2.0 * math.pi)
    step = numerics.norm_step if numerics.norm_step is not None else 1e-3 * width
    sampling = Sampling(t0, t0 + width, step)

    return ProblemConfig(equation, init, forcing, f_bound, numerics, sampling)


def load_config_text(text, name="<config>"):
    try:
        doc = tomli.loads(text)
    except tomli.TOMLDecodeError as err:
        raise ConfigError(name, f"invalid config syntax: {err}") from err
    return build_problem(doc)


def load_config(path):
    """Load and build a problem declaration from a file."""
    with open(path, "rb") as fh:
        try:
            doc = tomli.load(fh)
        except tomli.TOMLDecodeError as err:
            raise ConfigError(str(path), f"invalid config syntax: {err}") from err
    return build_problem(doc)


def load_raw(path):
    """Parsed-but-unbuilt document (used by parameter sweeps)."""
    with open(path, "rb") as fh:
        try:
            return tomli.load(fh)
        except tomli.TOMLDecodeError as err:
            raise ConfigError(str(path), f"invalid config syntax: {err}") from err


_PATH_PART = re.compile(r"^([A-Za-z_][A-Za-z_0-9]*)(?:\[(\d+)\])?$")


def set_param(doc, path, value):
    """Overwrite one scalar knob addressed by a dotted path.

    Paths follow the document structure, e.g. ``equation.g_lag`` or
    ``equation.term[0].b``; the key must already exist in the document.
    """
    parts = path.split(".")
    node = doc
    for i, part in enumerate(parts):
        m = _PATH_PART.match(part)
        if m is None:
            raise ConfigError(path, f"malformed parameter path component {part!r}")
        key, index = m.group(1), m.group(2)
        last = i == len(parts) - 1
        if not isinstance(node, dict) or key not in node:
            raise ConfigError(path, f"unknown parameter ({key!r} not found)")
        if last and index is None:
            node[key] = float(value)
            return
        node = node[key]
        if index is not None:
            if not isinstance(node, list) or int(index) >= len(node):
                raise ConfigError(path, f"index [{index}] out of range")
            node = node[int(index)]
            if last:
                raise ConfigError(path, "parameter path must end at a scalar key")
    raise ConfigError(path, "parameter path must end at a scalar key")
