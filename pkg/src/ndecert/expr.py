"""The small expression language used for coefficients, lags and initial data.

Grammar (whitespace-insensitive, ``^`` binds tightest and associates right,
then unary minus, then ``* /``, then ``+ -``)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' unary)?
    atom   := NUMBER | 't' | 'pi' | 'e'
            | NAME '(' expr (',' expr)* ')' | '(' expr ')'

Functions: ``sin cos exp log sqrt abs`` (one argument), ``min max`` (two).
Expression values are immutable ASTs; evaluation is routed through the
selected kernel backend and rejects division by zero, ``log`` of a
non-positive value, ``sqrt`` of a negative value and non-finite results.
"""

import math
import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Union

import numpy as np

from . import _kernels
from ._kernels.opcodes import (
    ERR_DIV_ZERO,
    ERR_LOG_DOMAIN,
    ERR_NONFINITE,
    ERR_POW_DOMAIN,
    ERR_SQRT_DOMAIN,
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
)

__all__ = [
    "Num", "Var", "Const", "Unary", "Binary", "Call", "Expr",
    "ParseError", "UnknownIdentifierError", "EvalDomainError",
    "parse", "unparse", "evaluate", "evaluate_grid", "compile_expr",
    "is_time_free", "num", "add", "sub", "mul", "div", "neg", "call", "T",
]


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    pass


@dataclass(frozen=True)
class Const:
    name: str


@dataclass(frozen=True)
class Unary:
    op: str
    operand: "Expr"


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    fn: str
    args: tuple


Expr = Union[Num, Var, Const, Unary, Binary, Call]

T = Var()

FUNCTIONS = {"sin": 1, "cos": 1, "exp": 1, "log": 1, "sqrt": 1, "abs": 1,
             "min": 2, "max": 2}
CONSTANTS = {"pi": math.pi, "e": math.e}

_ERR_MESSAGES = {
    ERR_DIV_ZERO: "division by zero",
    ERR_LOG_DOMAIN: "log of a non-positive value",
    ERR_SQRT_DOMAIN: "sqrt of a negative value",
    ERR_POW_DOMAIN: "invalid power",
    ERR_NONFINITE: "non-finite result",
}


class ParseError(ValueError):
    """Syntax error with the offending position (0-based)."""

    def __init__(self, message, position):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class UnknownIdentifierError(ParseError):
    pass


class EvalDomainError(ArithmeticError):
    """Raised when evaluation leaves the expression's domain."""

    def __init__(self, kind, t):
        super().__init__(f"{_ERR_MESSAGES.get(kind, 'evaluation error')} at t={t!r}")
        self.kind = kind
        self.t = t


_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^(),]))"
)


def _tokenize(source):
    tokens = []
    pos = 0
    n = len(source)
    while pos < n:
        m = _TOKEN_RE.match(source, pos)
        if m is None or m.end() == pos:
            stripped = source[pos:].lstrip()
            if not stripped:
                break
            at = n - len(stripped)
            raise ParseError(f"unexpected character {stripped[0]!r}", at)
        pos = m.end()
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
    tokens.append(("end", "", n))
    return tokens


class _Parser:
    def __init__(self, source):
        self.source = source
        self.tokens = _tokenize(source)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, op):
        kind, text, pos = self.peek()
        if kind != "op" or text != op:
            shown = repr(text) if kind != "end" else "end of input"
            raise ParseError(f"expected {op!r}, found {shown}", pos)
        return self.advance()

    def parse(self):
        e = self.expr()
        kind, text, pos = self.peek()
        if kind != "end":
            raise ParseError(f"expected operator or end of input, found {text!r}", pos)
        return e

    def expr(self):
        e = self.term()
        while True:
            kind, text, _ = self.peek()
            if kind == "op" and text in "+-":
                self.advance()
                e = Binary(text, e, self.term())
            else:
                return e

    def term(self):
        e = self.unary()
        while True:
            kind, text, _ = self.peek()
            if kind == "op" and text in "*/":
                self.advance()
                e = Binary(text, e, self.unary())
            else:
                return e

    def unary(self):
        kind, text, _ = self.peek()
        if kind == "op" and text == "-":
            self.advance()
            return Unary("-", self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        kind, text, _ = self.peek()
        if kind == "op" and text == "^":
            self.advance()
            return Binary("^", base, self.unary())
        return base

    def atom(self):
        kind, text, pos = self.advance()
        if kind == "num":
            return Num(float(text))
        if kind == "name":
            if text == "t":
                return Var()
            if text in CONSTANTS:
                return Const(text)
            if text in FUNCTIONS:
                self.expect_op("(")
                args = [self.expr()]
                while True:
                    k, tx, p = self.peek()
                    if k == "op" and tx == ",":
                        self.advance()
                        args.append(self.expr())
                    else:
                        break
                self.expect_op(")")
                arity = FUNCTIONS[text]
                if len(args) != arity:
                    raise ParseError(
                        f"{text} expects {arity} argument(s), got {len(args)}", pos)
                return Call(text, tuple(args))
            raise UnknownIdentifierError(f"unknown identifier {text!r}", pos)
        if kind == "op" and text == "(":
            e = self.expr()
            self.expect_op(")")
            return e
        shown = repr(text) if kind != "end" else "end of input"
        raise ParseError(f"expected number, name or '(', found {shown}", pos)


def parse(source):
    """Parse ``source`` into an immutable expression tree."""
    if not isinstance(source, str) or not source.strip():
        raise ParseError("empty expression", 0)
    return _Parser(source).parse()


_LVL_ADD, _LVL_MUL, _LVL_UNARY, _LVL_POW, _LVL_ATOM = 1, 2, 3, 4, 5


def _level(e):
    if isinstance(e, Binary):
        return {"+": _LVL_ADD, "-": _LVL_ADD, "*": _LVL_MUL, "/": _LVL_MUL,
                "^": _LVL_POW}[e.op]
    if isinstance(e, Unary):
        return _LVL_UNARY
    return _LVL_ATOM


def unparse(e):
    """Render a tree back to source; reparsing yields a structurally equal tree."""
    if isinstance(e, Num):
        return repr(e.value)
    if isinstance(e, Var):
        return "t"
    if isinstance(e, Const):
        return e.name
    if isinstance(e, Unary):
        s = unparse(e.operand)
        if _level(e.operand) < _LVL_UNARY:
            s = f"({s})"
        return "-" + s
    if isinstance(e, Call):
        return f"{e.fn}({', '.join(unparse(a) for a in e.args)})"
    if isinstance(e, Binary):
        lhs, rhs = unparse(e.left), unparse(e.right)
        if e.op == "^":
            if _level(e.left) < _LVL_ATOM:
                lhs = f"({lhs})"
            if _level(e.right) < _LVL_UNARY:
                rhs = f"({rhs})"
        else:
            lvl = _level(e)
            if _level(e.left) < lvl:
                lhs = f"({lhs})"
            if _level(e.right) <= lvl:
                rhs = f"({rhs})"
        return f"{lhs}{e.op}{rhs}"
    raise TypeError(f"not an expression node: {e!r}")


@dataclass(frozen=True)
class Program:
    """Postfix bytecode: parallel op/arg arrays plus a constant pool."""

    ops: np.ndarray
    args: np.ndarray
    consts: np.ndarray
    stack_need: int

    def as_tuple(self):
        return (self.ops, self.args, self.consts, self.stack_need)


_UNARY_OPS = {"sin": OP_SIN, "cos": OP_COS, "exp": OP_EXP, "log": OP_LOG,
              "sqrt": OP_SQRT, "abs": OP_ABS}
_BINARY_OPS = {"+": OP_ADD, "-": OP_SUB, "*": OP_MUL, "/": OP_DIV, "^": OP_POW,
               "min": OP_MIN, "max": OP_MAX}


@lru_cache(maxsize=4096)
def compile_expr(e):
    """Compile a tree to stack-machine bytecode (cached)."""
    ops, args, consts = [], [], []

    def emit(node):
        if isinstance(node, Num):
            ops.append(OP_CONST)
            args.append(len(consts))
            consts.append(float(node.value))
            return 1
        if isinstance(node, Const):
            ops.append(OP_CONST)
            args.append(len(consts))
            consts.append(CONSTANTS[node.name])
            return 1
        if isinstance(node, Var):
            ops.append(OP_T)
            args.append(-1)
            return 1
        if isinstance(node, Unary):
            d = emit(node.operand)
            ops.append(OP_NEG)
            args.append(-1)
            return d
        if isinstance(node, Call):
            if node.fn in _UNARY_OPS:
                d = emit(node.args[0])
                ops.append(_UNARY_OPS[node.fn])
                args.append(-1)
                return d
            d1 = emit(node.args[0])
            d2 = emit(node.args[1])
            ops.append(_BINARY_OPS[node.fn])
            args.append(-1)
            return max(d1, 1 + d2)
        if isinstance(node, Binary):
            d1 = emit(node.left)
            d2 = emit(node.right)
            ops.append(_BINARY_OPS[node.op])
            args.append(-1)
            return max(d1, 1 + d2)
        raise TypeError(f"not an expression node: {node!r}")

    depth = emit(e)
    return Program(
        np.asarray(ops, dtype=np.int32),
        np.asarray(args, dtype=np.int32),
        np.asarray(consts, dtype=np.float64),
        depth,
    )


def evaluate(e, t):
    """Evaluate the expression at time ``t`` in IEEE double precision."""
    prog = compile_expr(e)
    status, value = _kernels.eval_scalar(prog.ops, prog.args, prog.consts, float(t))
    if status != OK:
        raise EvalDomainError(status, float(t))
    return value


def evaluate_grid(e, ts):
    """Evaluate the expression over an array of times."""
    prog = compile_expr(e)
    ts = np.ascontiguousarray(ts, dtype=np.float64)
    status, t_err, values = _kernels.eval_grid(prog.ops, prog.args, prog.consts, ts)
    if status != OK:
        raise EvalDomainError(status, t_err)
    return values


@lru_cache(maxsize=4096)
def is_time_free(e):
    """True if the expression never references ``t``."""
    if isinstance(e, Var):
        return False
    if isinstance(e, (Num, Const)):
        return True
    if isinstance(e, Unary):
        return is_time_free(e.operand)
    if isinstance(e, Binary):
        return is_time_free(e.left) and is_time_free(e.right)
    if isinstance(e, Call):
        return all(is_time_free(a) for a in e.args)
    raise TypeError(f"not an expression node: {e!r}")


# -- tree builders (used when criteria/certificates compose expressions) -----

def num(v):
    v = float(v)
    if v < 0.0:
        return Unary("-", Num(-v))
    return Num(v)


def add(a, b):
    return Binary("+", a, b)


def sub(a, b):
    return Binary("-", a, b)


def mul(a, b):
    return Binary("*", a, b)


def div(a, b):
    return Binary("/", a, b)


def neg(a):
    return Unary("-", a)


def call(fn, *args):
    if fn not in FUNCTIONS:
        raise ValueError(f"unknown function {fn!r}")
    if len(args) != FUNCTIONS[fn]:
        raise ValueError(f"{fn} expects {FUNCTIONS[fn]} argument(s)")
    return Call(fn, tuple(args))
