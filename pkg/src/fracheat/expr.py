"""A small arithmetic language for problem data in config files.

Grammar (``-`` binds looser than ``^``, so ``-x^2`` is ``-(x^2)``)::

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := '-' factor | power
    power  := atom ('^' factor)?
    atom   := number | ident | ident '(' expr ')' | '(' expr ')'

Identifiers are closed: variables ``x``, ``t``; constants ``pi``,
``lambda1``; functions ``sin cos exp sqrt abs``.  Evaluation works on
floats or numpy arrays and refuses to produce NaN/inf silently.
"""
from __future__ import annotations

from dataclasses import dataclass
import math
import re
from typing import Mapping, Union

import numpy as np

from .errors import NumericalFailure, UsageError

__all__ = ["Expr", "Num", "Var", "Neg", "BinOp", "Call", "ExprSyntaxError",
           "parse", "evaluate", "to_source", "free_names"]

VARIABLES = frozenset({"x", "t"})
CONSTANTS = frozenset({"pi", "lambda1"})
FUNCTIONS = {
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "sqrt": np.sqrt,
    "abs": np.abs,
}


class ExprSyntaxError(UsageError):
    def __init__(self, offset: int, message: str, source: str = ""):
        super().__init__(f"syntax error at offset {offset}: {message}")
        self.offset = offset
        self.source = source


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Expr"


Expr = Union[Num, Var, Neg, BinOp, Call]

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^()]))"
)


def _tokenize(src: str):
    src = src.replace("−", "-")
    pos = 0
    toks = []
    while True:
        m = _TOKEN.match(src, pos)
        if m is None:
            rest = src[pos:]
            if rest.strip() == "":
                break
            bad = pos + len(rest) - len(rest.lstrip())
            raise ExprSyntaxError(bad, f"unexpected character {src[bad]!r}", src)
        kind = m.lastgroup
        toks.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    toks.append(("end", "", len(src)))
    return toks


class _Parser:
    def __init__(self, src: str):
        self.src = src
        self.toks = _tokenize(src)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def error(self, expected: str):
        kind, text, off = self.peek()
        found = "end of input" if kind == "end" else repr(text)
        raise ExprSyntaxError(off, f"expected {expected}, found {found}", self.src)

    def expect(self, op: str):
        kind, text, _ = self.peek()
        if kind != "op" or text != op:
            self.error(repr(op))
        self.take()

    def expr(self):
        node = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.factor()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = self.take()[1]
            node = BinOp(op, node, self.factor())
        return node

    def factor(self):
        if self.peek()[:2] == ("op", "-"):
            self.take()
            return Neg(self.factor())
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[:2] == ("op", "^"):
            self.take()
            return BinOp("^", base, self.factor())
        return base

    def atom(self):
        kind, text, off = self.peek()
        if kind == "num":
            self.take()
            return Num(float(text))
        if kind == "ident":
            self.take()
            if self.peek()[:2] == ("op", "("):
                if text not in FUNCTIONS:
                    raise ExprSyntaxError(off, f"unknown function {text!r}", self.src)
                self.take()
                arg = self.expr()
                self.expect(")")
                return Call(text, arg)
            if text in FUNCTIONS:
                raise ExprSyntaxError(self.peek()[2], f"expected '(' after function {text!r}", self.src)
            if text not in VARIABLES and text not in CONSTANTS:
                raise ExprSyntaxError(off, f"unknown identifier {text!r}", self.src)
            return Var(text)
        if kind == "op" and text == "(":
            self.take()
            node = self.expr()
            self.expect(")")
            return node
        self.error("a number, identifier or '('")


def parse(source: str) -> Expr:
    p = _Parser(source)
    node = p.expr()
    if p.peek()[0] != "end":
        p.error("an operator or end of input")
    return node


def free_names(expr: Expr) -> set:
    if isinstance(expr, Var):
        return {expr.name}
    if isinstance(expr, Num):
        return set()
    if isinstance(expr, Neg):
        return free_names(expr.operand)
    if isinstance(expr, Call):
        return free_names(expr.arg)
    return free_names(expr.left) | free_names(expr.right)


def _check(value, what):
    if not np.all(np.isfinite(value)):
        raise NumericalFailure(f"{what} produced a non-finite value")
    return value


def _eval(node, env):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        if node.name == "pi":
            return math.pi
        try:
            return env[node.name]
        except KeyError:
            raise UsageError(f"unbound variable {node.name!r}") from None
    if isinstance(node, Neg):
        return -_eval(node.operand, env)
    if isinstance(node, Call):
        arg = _eval(node.arg, env)
        if node.func == "sqrt" and np.any(np.asarray(arg) < 0):
            raise NumericalFailure("sqrt of a negative number")
        return _check(FUNCTIONS[node.func](arg), f"{node.func}()")
    left = _eval(node.left, env)
    right = _eval(node.right, env)
    op = node.op
    if op == "+":
        return _check(left + right, "addition")
    if op == "-":
        return _check(left - right, "subtraction")
    if op == "*":
        return _check(left * right, "multiplication")
    if op == "/":
        if np.any(np.asarray(right) == 0):
            raise NumericalFailure("division by zero")
        return _check(np.divide(left, right), "division")
    # '^'
    base = np.asarray(left, dtype=float)
    expo = np.asarray(right, dtype=float)
    if np.any((base < 0) & (expo != np.round(expo))):
        raise NumericalFailure("negative base raised to a non-integer power")
    if np.any((base == 0) & (expo < 0)):
        raise NumericalFailure("zero raised to a negative power")
    with np.errstate(over="ignore"):
        out = np.power(base, expo)
    if out.ndim == 0:
        out = float(out)
    return _check(out, "power")


def evaluate(expr: Expr, bindings: Mapping[str, object] | None = None):
    """Evaluate ``expr``; variables may be floats or broadcastable arrays."""
    env = dict(bindings or {})
    with np.errstate(all="ignore"):
        out = _eval(expr, env)
    if np.ndim(out) == 0:
        return float(out)
    return np.asarray(out, dtype=float)


# binding strength used by the printer
_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def _prec(node) -> int:
    if isinstance(node, BinOp):
        return 4 if node.op == "^" else _PREC[node.op]
    if isinstance(node, Neg) or (isinstance(node, Num) and math.copysign(1.0, node.value) < 0):
        return 3
    return 5


def _wrap(node, min_prec):
    text = to_source(node)
    return f"({text})" if _prec(node) < min_prec else text


def to_source(expr: Expr) -> str:
    """Canonical text with the fewest parentheses that parse back to ``expr``."""
    if isinstance(expr, Num):
        v = float(expr.value)
        text = repr(abs(v))
        if text.endswith(".0"):
            text = text[:-2]
        return "-" + text if math.copysign(1.0, v) < 0 else text
    if isinstance(expr, Var):
        return expr.name
    if isinstance(expr, Call):
        return f"{expr.func}({to_source(expr.arg)})"
    if isinstance(expr, Neg):
        return "-" + _wrap(expr.operand, 3)
    if expr.op == "^":
        return f"{_wrap(expr.left, 5)}^{_wrap(expr.right, 3)}"
    p = _PREC[expr.op]
    return f"{_wrap(expr.left, p)}{expr.op}{_wrap(expr.right, p + 1)}"
