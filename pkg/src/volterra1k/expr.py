"""Small arithmetic expression language over the variables ``t`` and ``s``.

Problem data (kernels, jump curves, right-hand sides, exact solutions) is
written in a closed expression language and parsed into an immutable AST.
The grammar:

* binary operators ``+ - * / ^`` with standard precedence; ``^`` binds
  tightest and is right-associative, then unary minus, then ``* /``,
  then ``+ -``; all binary operators except ``^`` are left-associative
* functions ``sin cos exp ln sqrt``, always called as ``name(arg)``
* the constant ``pi`` and numeric literals in decimal or scientific form
* variables ``t`` and ``s``; any other identifier is rejected

ASTs evaluate with numpy semantics, so ``t`` and ``s`` may be scalars or
arrays. Domain violations (``ln`` of a non-positive value, ``sqrt`` of a
negative, division by zero, a negative base raised to a fractional power,
overflow past the float range) raise :class:`DomainError`. Symbolic
differentiation is exact and performs no simplification; derivative trees
can be large but evaluation cost is negligible at the scales used here.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union

import numpy as np

__all__ = [
    "Expr",
    "Constant",
    "NamedConstant",
    "Variable",
    "Unary",
    "Binary",
    "ParseError",
    "UnknownIdentifierError",
    "DomainError",
    "parse",
    "evaluate",
    "differentiate",
    "serialize",
    "variables",
]

FUNCTIONS = ("sin", "cos", "exp", "ln", "sqrt")
VARIABLES = ("t", "s")


class ParseError(ValueError):
    """Raised on malformed input; ``position`` is a 0-based text offset."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (offset {position})")
        self.position = position


class UnknownIdentifierError(ParseError):
    """An identifier other than t, s, pi or a known function name."""


class DomainError(ArithmeticError):
    """Evaluation left the real domain (log/sqrt/pow/overflow/zero division)."""


class Expr:
    """Base class for AST nodes. Immutable; safe to share across threads."""

    def __call__(self, t=0.0, s=0.0):
        return evaluate(self, t, s)

    def diff(self, var: str = "t") -> "Expr":
        return differentiate(self, var)

    def __str__(self) -> str:
        return serialize(self)


@dataclass(frozen=True)
class Constant(Expr):
    value: float


@dataclass(frozen=True)
class NamedConstant(Expr):
    name: str  # only "pi"


@dataclass(frozen=True)
class Variable(Expr):
    name: str  # "t" or "s"


@dataclass(frozen=True)
class Unary(Expr):
    op: str  # neg | sin | cos | exp | ln | sqrt
    child: Expr


@dataclass(frozen=True)
class Binary(Expr):
    op: str  # + - * / ^
    left: Expr
    right: Expr


# ---------------------------------------------------------------------------
# tokenizer / parser

_TOKEN_RE = re.compile(
    r"(?P<num>(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()])"
)


@dataclass(frozen=True)
class _Token:
    kind: str  # num | name | op | end
    text: str
    pos: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos].isspace():
            pos += 1
            continue
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        tokens.append(_Token(kind, m.group(), pos))
        pos = m.end()
    tokens.append(_Token("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self) -> _Token:
        return self.tokens[self.i]

    def advance(self) -> _Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, op: str) -> None:
        tok = self.peek()
        if tok.kind != "op" or tok.text != op:
            raise ParseError(f"expected {op!r}", tok.pos)
        self.advance()

    def parse(self) -> Expr:
        node = self.sum()
        tok = self.peek()
        if tok.kind != "end":
            raise ParseError(f"unexpected trailing input {tok.text!r}", tok.pos)
        return node

    def sum(self) -> Expr:
        node = self.product()
        while self.peek().kind == "op" and self.peek().text in "+-":
            op = self.advance().text
            node = Binary(op, node, self.product())
        return node

    def product(self) -> Expr:
        node = self.unary()
        while self.peek().kind == "op" and self.peek().text in "*/":
            op = self.advance().text
            node = Binary(op, node, self.unary())
        return node

    def unary(self) -> Expr:
        tok = self.peek()
        if tok.kind == "op" and tok.text == "-":
            self.advance()
            return Unary("neg", self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        tok = self.peek()
        if tok.kind == "op" and tok.text == "^":
            self.advance()
            # right-associative; the exponent may carry its own unary minus
            return Binary("^", base, self.unary())
        return base

    def atom(self) -> Expr:
        tok = self.advance()
        if tok.kind == "num":
            value = float(tok.text)
            if not math.isfinite(value):
                raise ParseError(f"numeric literal {tok.text!r} out of range", tok.pos)
            return Constant(value)
        if tok.kind == "name":
            if tok.text in VARIABLES:
                return Variable(tok.text)
            if tok.text == "pi":
                return NamedConstant("pi")
            if tok.text in FUNCTIONS:
                self.expect_op("(")
                arg = self.sum()
                self.expect_op(")")
                return Unary(tok.text, arg)
            raise UnknownIdentifierError(f"unknown identifier {tok.text!r}", tok.pos)
        if tok.kind == "op" and tok.text == "(":
            node = self.sum()
            self.expect_op(")")
            return node
        raise ParseError("expected a number, name or parenthesized expression", tok.pos)


def parse(text: str) -> Expr:
    """Parse ``text`` into an AST; raises :class:`ParseError` on bad input."""
    return _Parser(text).parse()


# ---------------------------------------------------------------------------
# evaluation

_UNARY_FN = {
    "neg": np.negative,
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "ln": np.log,
    "sqrt": np.sqrt,
}


def _ev(e: Expr, t, s):
    match e:
        case Constant(value=v):
            return np.float64(v)
        case NamedConstant():
            return np.float64(math.pi)
        case Variable(name=n):
            return t if n == "t" else s
        case Unary(op=op, child=c):
            return _UNARY_FN[op](_ev(c, t, s))
        case Binary(op="+", left=l, right=r):
            return _ev(l, t, s) + _ev(r, t, s)
        case Binary(op="-", left=l, right=r):
            return _ev(l, t, s) - _ev(r, t, s)
        case Binary(op="*", left=l, right=r):
            return _ev(l, t, s) * _ev(r, t, s)
        case Binary(op="/", left=l, right=r):
            return _ev(l, t, s) / _ev(r, t, s)
        case Binary(op="^", left=l, right=r):
            return _ev(l, t, s) ** _ev(r, t, s)
    raise TypeError(f"not an expression node: {e!r}")


def evaluate(e: Expr, t=0.0, s=0.0) -> Union[float, np.ndarray]:
    """Evaluate ``e`` at (t, s).

    Scalars in, float out; if ``t`` or ``s`` is an array the result follows
    numpy broadcasting (a constant expression still returns a float).
    Negative bases under ``^`` are allowed only for integer exponents;
    anything leaving the real domain raises :class:`DomainError`.
    """
    t_in = t if isinstance(t, np.ndarray) else np.float64(t)
    s_in = s if isinstance(s, np.ndarray) else np.float64(s)
    try:
        with np.errstate(divide="raise", invalid="raise", over="raise"):
            out = _ev(e, t_in, s_in)
    except FloatingPointError as exc:
        raise DomainError(str(exc)) from exc
    if isinstance(out, np.ndarray) and out.ndim > 0:
        return out
    return float(out)


def variables(e: Expr) -> frozenset[str]:
    """Names of the variables appearing in ``e`` (subset of {t, s})."""
    match e:
        case Variable(name=n):
            return frozenset((n,))
        case Unary(child=c):
            return variables(c)
        case Binary(left=l, right=r):
            return variables(l) | variables(r)
    return frozenset()


# ---------------------------------------------------------------------------
# symbolic differentiation

def differentiate(e: Expr, var: str) -> Expr:
    """Exact symbolic derivative of ``e`` with respect to ``var``.

    No simplification is attempted. ``a^b`` with a variable-free exponent
    uses the power rule (so e.g. polynomials stay evaluable at t=0); a
    variable exponent falls back to ``a^b * (b' ln a + b a'/a)``.
    """
    if var not in VARIABLES:
        raise ValueError(f"cannot differentiate with respect to {var!r}")
    match e:
        case Constant() | NamedConstant():
            return Constant(0.0)
        case Variable(name=n):
            return Constant(1.0 if n == var else 0.0)
        case Unary(op="neg", child=c):
            return Unary("neg", differentiate(c, var))
        case Unary(op="sin", child=c):
            return Binary("*", Unary("cos", c), differentiate(c, var))
        case Unary(op="cos", child=c):
            return Unary("neg", Binary("*", Unary("sin", c), differentiate(c, var)))
        case Unary(op="exp", child=c):
            return Binary("*", Unary("exp", c), differentiate(c, var))
        case Unary(op="ln", child=c):
            return Binary("/", differentiate(c, var), c)
        case Unary(op="sqrt", child=c):
            return Binary(
                "/", differentiate(c, var), Binary("*", Constant(2.0), Unary("sqrt", c))
            )
        case Binary(op="+" | "-" as op, left=l, right=r):
            return Binary(op, differentiate(l, var), differentiate(r, var))
        case Binary(op="*", left=l, right=r):
            return Binary(
                "+",
                Binary("*", differentiate(l, var), r),
                Binary("*", l, differentiate(r, var)),
            )
        case Binary(op="/", left=l, right=r):
            return Binary(
                "/",
                Binary(
                    "-",
                    Binary("*", differentiate(l, var), r),
                    Binary("*", l, differentiate(r, var)),
                ),
                Binary("^", r, Constant(2.0)),
            )
        case Binary(op="^", left=l, right=r):
            if not variables(r):
                # power rule with a constant (variable-free) exponent
                return Binary(
                    "*",
                    Binary("*", r, Binary("^", l, Binary("-", r, Constant(1.0)))),
                    differentiate(l, var),
                )
            return Binary(
                "*",
                Binary("^", l, r),
                Binary(
                    "+",
                    Binary("*", differentiate(r, var), Unary("ln", l)),
                    Binary("*", r, Binary("/", differentiate(l, var), l)),
                ),
            )
    raise TypeError(f"not an expression node: {e!r}")


# ---------------------------------------------------------------------------
# serialization

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}


def _prec(e: Expr) -> int:
    match e:
        case Binary(op=op):
            return _PREC[op]
        case Unary(op="neg"):
            return 3
    return 9


def serialize(e: Expr) -> str:
    """Render ``e`` as text that parses back to a structurally equal AST.

    (Negative ``Constant`` values, which the parser itself never produces,
    render parenthesized and re-parse as a negation of the positive value.)
    """
    match e:
        case Constant(value=v):
            return f"({v!r})" if v < 0 else repr(v)
        case NamedConstant(name=n):
            return n
        case Variable(name=n):
            return n
        case Unary(op="neg", child=c):
            inner = serialize(c)
            return f"-({inner})" if _prec(c) < 3 else f"-{inner}"
        case Unary(op=op, child=c):
            return f"{op}({serialize(c)})"
        case Binary(op=op, left=l, right=r):
            p = _PREC[op]
            lhs = serialize(l)
            rhs = serialize(r)
            # left-associative chains print flat; '^' is right-associative,
            # and equal-precedence right children keep parentheses so the
            # printed text re-parses to the identical tree
            if _prec(l) < p or (_prec(l) == p and op == "^"):
                lhs = f"({lhs})"
            if _prec(r) < p or (_prec(r) == p and op != "^"):
                rhs = f"({rhs})"
            return f"{lhs}{op}{rhs}"
    raise TypeError(f"not an expression node: {e!r}")
