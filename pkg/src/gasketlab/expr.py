"""Scalar expressions in ``x`` and ``y``.

Grammar (hand-written recursive descent)::

    expr   := term (("+" | "-") term)*
    term   := unary (("*" | "/") unary)*
    unary  := "-" unary | power
    power  := atom ("^" unary)?
    atom   := NUMBER | "x" | "y" | FUNC "(" expr ")" | "(" expr ")"

so ``^`` binds tighter than unary minus, which binds tighter than ``*``/``/``;
``^`` is right-associative.  Implicit multiplication is rejected.

Evaluation is vectorised: an :class:`Expression` is a callable
``(x, y) -> ndarray`` and can be passed anywhere an evaluable is expected.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import GasketError

FUNCTIONS = ("sqrt", "sin", "cos", "exp", "abs", "ln")
VARIABLES = ("x", "y")


class ExpressionSyntaxError(GasketError, ValueError):
    code = "expression_syntax"
    exit_status = 2

    def __init__(self, message, offset, expected=()):
        exp = ", ".join(sorted(expected))
        super().__init__(f"{message} at offset {offset}" + (f" (expected {exp})" if exp else ""))
        self.offset = offset
        self.expected = frozenset(expected)

    def to_dict(self):
        d = super().to_dict()
        d.update(offset=self.offset, expected=sorted(self.expected))
        return d


class ExpressionDomainError(GasketError, ArithmeticError):
    code = "expression_domain"

    def __init__(self, message, span):
        super().__init__(f"{message} (source span {span[0]}..{span[1]})")
        self.span = span

    def to_dict(self):
        d = super().to_dict()
        d["span"] = list(self.span)
        return d


# --- AST -------------------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: float
    span: tuple = (0, 0)


@dataclass(frozen=True)
class Var:
    name: str
    span: tuple = (0, 0)


@dataclass(frozen=True)
class Neg:
    operand: "Node"
    span: tuple = (0, 0)


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"
    span: tuple = (0, 0)


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Node"
    span: tuple = (0, 0)


Node = Union[Num, Var, Neg, BinOp, Call]


def strip_spans(node: Node) -> Node:
    """Copy of ``node`` with all spans zeroed, for structural comparison."""
    if isinstance(node, Num):
        return Num(node.value)
    if isinstance(node, Var):
        return Var(node.name)
    if isinstance(node, Neg):
        return Neg(strip_spans(node.operand))
    if isinstance(node, Call):
        return Call(node.func, strip_spans(node.arg))
    return BinOp(node.op, strip_spans(node.left), strip_spans(node.right))


# --- lexer -----------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<ident>[A-Za-z_]\w*)|(?P<op>[-+*/^()]))"
)

_ATOM_START = frozenset({"number", "x", "y", "function", "(", "-"})


@dataclass(frozen=True)
class _Tok:
    kind: str  # "num", "ident", an operator character, or "end"
    text: str
    start: int
    end: int


def _tokenize(src: str) -> list[_Tok]:
    toks = []
    pos = 0
    n = len(src)
    while True:
        m = _TOKEN.match(src, pos)
        if m is None or m.end() == m.start() or m.lastgroup is None:
            rest = src[pos:]
            stripped = rest.lstrip()
            if not stripped:
                toks.append(_Tok("end", "", n, n))
                return toks
            off = n - len(stripped)
            raise ExpressionSyntaxError(f"unexpected character {stripped[0]!r}", _byte(src, off))
        kind = m.lastgroup
        text = m.group(kind)
        start = m.start(kind)
        toks.append(_Tok(text if kind == "op" else kind, text, start, m.end()))
        pos = m.end()


def _byte(src: str, i: int) -> int:
    return len(src[:i].encode("utf-8"))


# --- parser ----------------------------------------------------------------


class _Parser:
    def __init__(self, src: str):
        self.src = src
        self.toks = _tokenize(src)
        self.i = 0

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def advance(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def fail(self, expected, message=None):
        t = self.tok
        what = "end of input" if t.kind == "end" else repr(t.text)
        raise ExpressionSyntaxError(message or f"unexpected {what}", _byte(self.src, t.start), expected)

    def span(self, start, end):
        return (_byte(self.src, start), _byte(self.src, end))

    def parse(self) -> Node:
        node = self.expr()
        if self.tok.kind != "end":
            self.fail({"+", "-", "*", "/", "^", "end of input"})
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.tok.kind in ("+", "-"):
            op = self.advance().kind
            right = self.term()
            node = BinOp(op, node, right, (node.span[0], right.span[1]))
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.tok.kind in ("*", "/"):
            op = self.advance().kind
            right = self.unary()
            node = BinOp(op, node, right, (node.span[0], right.span[1]))
        return node

    def unary(self) -> Node:
        if self.tok.kind == "-":
            t = self.advance()
            operand = self.unary()
            return Neg(operand, (_byte(self.src, t.start), operand.span[1]))
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        if self.tok.kind == "^":
            self.advance()
            exponent = self.unary()
            return BinOp("^", base, exponent, (base.span[0], exponent.span[1]))
        return base

    def atom(self) -> Node:
        t = self.tok
        if t.kind == "num":
            self.advance()
            return Num(float(t.text), self.span(t.start, t.end))
        if t.kind == "ident":
            if t.text in VARIABLES:
                self.advance()
                return Var(t.text, self.span(t.start, t.end))
            if t.text in FUNCTIONS:
                self.advance()
                if self.tok.kind != "(":
                    self.fail({"("})
                self.advance()
                arg = self.expr()
                if self.tok.kind != ")":
                    self.fail({")", "+", "-", "*", "/", "^"})
                close = self.advance()
                return Call(t.text, arg, self.span(t.start, close.end))
            self.fail(_ATOM_START, f"unknown identifier {t.text!r}")
        if t.kind == "(":
            self.advance()
            inner = self.expr()
            if self.tok.kind != ")":
                self.fail({")", "+", "-", "*", "/", "^"})
            self.advance()
            return inner
        self.fail(_ATOM_START)


# --- evaluation ------------------------------------------------------------


def _eval(node: Node, x: np.ndarray, y: np.ndarray):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        return x if node.name == "x" else y
    if isinstance(node, Neg):
        return -_eval(node.operand, x, y)
    if isinstance(node, Call):
        a = np.asarray(_eval(node.arg, x, y), dtype=float)
        if node.func == "sqrt":
            if np.any(a < 0):
                raise ExpressionDomainError("sqrt of a negative number", node.span)
            return np.sqrt(a)
        if node.func == "ln":
            if np.any(a <= 0):
                raise ExpressionDomainError("ln of a non-positive number", node.span)
            return np.log(a)
        if node.func == "exp":
            with np.errstate(over="ignore"):
                r = np.exp(a)
            if not np.all(np.isfinite(r)):
                raise ExpressionDomainError("exp overflow", node.span)
            return r
        return {"sin": np.sin, "cos": np.cos, "abs": np.abs}[node.func](a)
    left = _eval(node.left, x, y)
    right = _eval(node.right, x, y)
    op = node.op
    if op == "+":
        return left + right
    if op == "-":
        return left - right
    if op == "*":
        return left * right
    if op == "/":
        if np.any(np.asarray(right) == 0):
            raise ExpressionDomainError("division by zero", node.span)
        return left / right
    with np.errstate(all="ignore"):
        r = np.power(np.asarray(left, dtype=float), right)
    if not np.all(np.isfinite(r)):
        raise ExpressionDomainError("power undefined or overflowing", node.span)
    return r


# --- printing --------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4, "atom": 5}


def _prec(node: Node) -> int:
    if isinstance(node, BinOp):
        return _PREC[node.op]
    if isinstance(node, Neg):
        return _PREC["neg"]
    return _PREC["atom"]


def _fmt_num(v: float) -> str:
    if v.is_integer() and abs(v) < 1e16:
        return str(int(v))
    return repr(v)


def pretty(node: Node) -> str:
    """Minimal-parenthesis rendering that parses back to the same tree."""
    if isinstance(node, Num):
        return _fmt_num(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Call):
        return f"{node.func}({pretty(node.arg)})"
    if isinstance(node, Neg):
        inner = pretty(node.operand)
        if _prec(node.operand) < _PREC["neg"]:
            inner = f"({inner})"
        return f"-{inner}"
    p = _PREC[node.op]
    left, right = pretty(node.left), pretty(node.right)
    if node.op == "^":
        if _prec(node.left) <= p:
            left = f"({left})"
        if _prec(node.right) < _PREC["neg"]:
            right = f"({right})"
        return f"{left}^{right}"
    if _prec(node.left) < p:
        left = f"({left})"
    if _prec(node.right) <= p:
        right = f"({right})"
    return f"{left} {node.op} {right}"


@dataclass(frozen=True)
class Expression:
    """A parsed expression; call it as ``e(x, y)`` on scalars or arrays."""

    root: Node
    source: str = ""

    def __call__(self, x, y):
        xa = np.asarray(x, dtype=float)
        ya = np.asarray(y, dtype=float)
        r = _eval(self.root, xa, ya)
        return np.broadcast_to(np.asarray(r, dtype=float), np.broadcast(xa, ya).shape).copy()

    def pretty(self) -> str:
        return pretty(self.root)

    def __str__(self) -> str:
        return self.pretty()


def parse(src: str) -> Expression:
    """Parse ``src``; raises :class:`ExpressionSyntaxError` with a byte offset."""
    if not src or not src.strip():
        raise ExpressionSyntaxError("empty expression", 0, _ATOM_START)
    return Expression(_Parser(src).parse(), src)


def evaluate(e: Expression, t) -> float:
    """Evaluate at a single point ``t = (x, y)``."""
    return float(e(float(t[0]), float(t[1])))


# Reference surface and base function used by the reproduce command.
FIGURE_F = "(x*y+113)/432"
FIGURE_B = "(x*y+113)/432 - x*(x-y+1.22)*(x-1)*y*(y-3^(1/2)/2)"


def figure_f() -> Expression:
    return parse(FIGURE_F)


def figure_b() -> Expression:
    return parse(FIGURE_B)


def constant(c: float):
    """Vectorised constant function."""

    def fn(x, y):
        return np.full(np.broadcast(np.asarray(x), np.asarray(y)).shape, float(c))

    return fn


def coordinate_x(x, y):
    return np.asarray(x, dtype=float) + 0.0 * np.asarray(y, dtype=float)


def bump(x, y):
    """Non-negative polynomial vanishing on the triangle's edges (max 1)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    h = math.sqrt(3.0)
    # product of the three edge distances, scaled so the centroid maps to 1
    d = y * (h * x - y) * (h * (1.0 - x) - y)
    return d / (h / 6.0 * (h / 2.0 - h / 6.0) * (h / 2.0 - h / 6.0))
