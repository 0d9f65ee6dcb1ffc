"""Coefficient expressions in ``x`` and ``y``: parsing, printing, evaluation.

Grammar (``^`` binds tighter than unary minus, and is right-associative)::

    expr   := term (("+" | "-") term)*
    term   := unary (("*" | "/") unary)*
    unary  := "-" unary | power
    power  := atom ("^" unary)?
    atom   := NUMBER | "x" | "y" | "pi" | "e" | FUNC "(" expr ")" | "(" expr ")"

``FUNC`` is one of exp, log, sin, cos, sqrt.  Evaluation is generic over the
scalar type, so feeding coordinate jets yields the jet of the expression.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union

from quartop.errors import DomainError, ParseError, UnknownIdentifier, ZeroDivisor
from quartop.jet import (
    UNIT_TOL,
    Jet,
    Point,
    Scalar,
    jcos,
    jexp,
    jlog,
    jpow,
    jsin,
    jsqrt,
    lift,
    value_of,
)

FUNCTIONS = {"exp": jexp, "log": jlog, "sin": jsin, "cos": jcos, "sqrt": jsqrt}
CONSTANTS = {"pi": math.pi, "e": math.e}
VARIABLES = ("x", "y")


class _Arith:
    """Operators for building trees programmatically; folds 0 and 1 literals."""

    def __add__(self, other):
        other = _node(other)
        if _is_num(other, 0.0):
            return self
        if _is_num(self, 0.0):
            return other
        return BinOp("+", self, other)

    def __radd__(self, other):
        return _node(other) + self

    def __sub__(self, other):
        other = _node(other)
        if _is_num(other, 0.0):
            return self
        return BinOp("-", self, other)

    def __rsub__(self, other):
        return _node(other) - self

    def __mul__(self, other):
        other = _node(other)
        if _is_num(self, 0.0) or _is_num(other, 0.0):
            return Num(0.0)
        if _is_num(other, 1.0):
            return self
        if _is_num(self, 1.0):
            return other
        return BinOp("*", self, other)

    def __rmul__(self, other):
        return _node(other) * self

    def __truediv__(self, other):
        other = _node(other)
        if _is_num(other, 1.0):
            return self
        return BinOp("/", self, other)

    def __rtruediv__(self, other):
        return _node(other) / self

    def __neg__(self):
        return Num(-self.value) if isinstance(self, Num) else Neg(self)

    def __pow__(self, n):
        return BinOp("^", self, _node(n))


def _node(v) -> "Expression":
    if isinstance(v, _Arith):
        return v  # type: ignore[return-value]
    return Num(float(v))


def _is_num(v, value: float) -> bool:
    return isinstance(v, Num) and v.value == value


@dataclass(frozen=True)
class Num(_Arith):
    value: float


@dataclass(frozen=True)
class Var(_Arith):
    name: str


@dataclass(frozen=True)
class Const(_Arith):
    name: str


@dataclass(frozen=True)
class Neg(_Arith):
    operand: "Expression"


@dataclass(frozen=True)
class BinOp(_Arith):
    op: str
    left: "Expression"
    right: "Expression"


@dataclass(frozen=True)
class Call(_Arith):
    func: str
    arg: "Expression"


Expression = Union[Num, Var, Const, Neg, BinOp, Call]

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>[-+*/^()]))"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos >= len(text):
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            raise ParseError(f"unexpected character {text[pos]!r}", pos, text=text)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self) -> tuple[str, str, int]:
        return self.tokens[self.i]

    def advance(self) -> tuple[str, str, int]:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def fail(self, message: str, expected: str | None = None) -> ParseError:
        kind, val, off = self.peek()
        what = "end of input" if kind == "end" else repr(val)
        return ParseError(f"{message}: found {what}", off, expected, self.text)

    def expect(self, value: str) -> None:
        kind, val, _ = self.peek()
        if kind != "op" or val != value:
            raise self.fail(f"expected {value!r}", repr(value))
        self.advance()

    def parse(self) -> Expression:
        node = self.expr()
        if self.peek()[0] != "end":
            raise self.fail("unexpected token", "operator or end of input")
        return node

    def expr(self) -> Expression:
        node = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.advance()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Expression:
        node = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = self.advance()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Expression:
        if self.peek()[:2] == ("op", "-"):
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expression:
        base = self.atom()
        if self.peek()[:2] == ("op", "^"):
            self.advance()
            return BinOp("^", base, self.unary())
        return base

    def atom(self) -> Expression:
        kind, val, off = self.peek()
        if kind == "num":
            self.advance()
            return Num(float(val))
        if kind == "name":
            self.advance()
            if val in VARIABLES:
                return Var(val)
            if val in CONSTANTS:
                return Const(val)
            if val in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(val, arg)
            raise UnknownIdentifier(f"unknown identifier {val!r}", off,
                                    "x, y, pi, e or one of " + ", ".join(FUNCTIONS), self.text)
        if (kind, val) == ("op", "("):
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        raise self.fail("expected an operand", "number, variable, function or '('")


def parse(text: str) -> Expression:
    """Parse ``text``; raises :class:`ParseError` with the byte offset of the problem."""
    return _Parser(text).parse()


# printing -------------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}


def _prec(node: Expression) -> int:
    if isinstance(node, BinOp):
        return _PREC[node.op]
    if isinstance(node, Neg):
        return 3
    return 5


def unparse(node: Expression) -> str:
    """Render with the fewest parentheses that reparse to the same tree."""
    def wrap(child: Expression, need: int) -> str:
        s = unparse(child)
        return f"({s})" if _prec(child) < need else s

    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, (Var, Const)):
        return node.name
    if isinstance(node, Call):
        return f"{node.func}({unparse(node.arg)})"
    if isinstance(node, Neg):
        return "-" + wrap(node.operand, 3)
    p = _PREC[node.op]
    if node.op == "^":
        return f"{wrap(node.left, 5)}^{wrap(node.right, 3)}"
    return f"{wrap(node.left, p)} {node.op} {wrap(node.right, p + 1)}"


def free_variables(node: Expression) -> frozenset[str]:
    if isinstance(node, Var):
        return frozenset({node.name})
    if isinstance(node, (Num, Const)):
        return frozenset()
    if isinstance(node, Neg):
        return free_variables(node.operand)
    if isinstance(node, Call):
        return free_variables(node.arg)
    return free_variables(node.left) | free_variables(node.right)


# evaluation -----------------------------------------------------------------

def evaluate(node: Expression, x: Scalar, y: Scalar) -> Scalar:
    """Evaluate over floats or jets (``x`` and ``y`` of the same kind)."""
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        return x if node.name == "x" else y
    if isinstance(node, Const):
        return CONSTANTS[node.name]
    if isinstance(node, Neg):
        return -evaluate(node.operand, x, y)
    if isinstance(node, Call):
        return FUNCTIONS[node.func](evaluate(node.arg, x, y))
    left = evaluate(node.left, x, y)
    if node.op == "^":
        return _power(left, node.right, x, y)
    right = evaluate(node.right, x, y)
    if node.op == "+":
        return left + right
    if node.op == "-":
        return left - right
    if node.op == "*":
        return left * right
    if abs(value_of(right)) <= UNIT_TOL:
        raise ZeroDivisor(f"division by {unparse(node.right)!r}, which vanishes here")
    return left / right


def _power(base: Scalar, exponent: Expression, x: Scalar, y: Scalar) -> Scalar:
    if not free_variables(exponent):
        r = float(evaluate(exponent, 0.0, 0.0))
        if r.is_integer():
            if r < 0 and abs(value_of(base)) <= UNIT_TOL:
                raise ZeroDivisor("negative power of a vanishing base")
            return base ** int(r)
        return jpow(base, r)
    if value_of(base) <= 0.0:
        raise DomainError("variable exponent needs a positive base")
    return jexp(evaluate(exponent, x, y) * jlog(base))


def eval_jet(node: Expression, point: Point, order: int) -> Jet:
    """The order-``order`` jet at ``point`` of the function ``node`` defines."""
    x = Jet.variable(1, order, point)
    y = Jet.variable(2, order, point)
    return lift(evaluate(node, x, y), order, (float(point[0]), float(point[1])))


def eval_float(node: Expression, point: Point) -> float:
    return float(evaluate(node, float(point[0]), float(point[1])))
