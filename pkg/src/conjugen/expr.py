"""Holomorphic expression DSL with exact first and second derivatives.

Grammar (lowest to highest binding)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := ('-' | '+') unary | power
    power  := atom ('^' exponent)?          # right associative
    atom   := NUMBER | 'i' | phiN | NAME '(' expr ')' | '(' expr ')'

Exponents must be integer literals, optionally negated (``phi1^-2``,
``phi1^(-2)``). Only analytic primitives are admitted, so every parsed
expression is holomorphic in its ``phi`` variables.

Derivatives come from forward-mode AD on second-order jets, which is what a
dual number nested inside a dual number reduces to once the cross term is kept
for every pair of directions.
"""

from __future__ import annotations

import cmath
import math
import re
from dataclasses import dataclass
from typing import Union

import numpy as np

__all__ = [
    "ArityError",
    "EvalDomainError",
    "EvalResult",
    "ExprError",
    "ExprSyntaxError",
    "HoloExpr",
    "NonHolomorphicError",
    "evaluate",
    "parse",
]


class ExprError(ValueError):
    """Base class for DSL errors."""


class ExprSyntaxError(ExprError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class ArityError(ExprError):
    pass


class NonHolomorphicError(ExprError):
    pass


class EvalDomainError(ArithmeticError):
    """A pole, branch point or overflow was hit while evaluating."""

    def __init__(self, message: str, subexpression: str):
        super().__init__(f"{message} in '{subexpression}'")
        self.subexpression = subexpression


# ---------------------------------------------------------------------------
# AST

@dataclass(frozen=True)
class Num:
    value: complex


@dataclass(frozen=True)
class Var:
    index: int  # 1-based, as written


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * /
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Pow:
    base: "Node"
    exponent: int


@dataclass(frozen=True)
class Call:
    name: str
    arg: "Node"


Node = Union[Num, Var, Neg, BinOp, Pow, Call]

FUNCTIONS = ("exp", "sin", "cos", "log")
# Lexed so the user gets a targeted message instead of "unknown name".
NON_HOLOMORPHIC = ("conj", "re", "im", "abs", "real", "imag", "arg")
MAX_EXPONENT = 4096


def to_source(node: Node) -> str:
    """Print an AST back to DSL text; binary operations are fully parenthesised."""
    if isinstance(node, Num):
        v = node.value
        if v == 1j:
            return "i"
        if v.imag != 0:
            # not produced by the parser, but keep printing total
            return f"({to_source(Num(complex(v.real)))} + {v.imag!r}*i)"
        return repr(v.real)
    if isinstance(node, Var):
        return f"phi{node.index}"
    if isinstance(node, Neg):
        return f"(-{to_source(node.operand)})"
    if isinstance(node, BinOp):
        return f"({to_source(node.left)} {node.op} {to_source(node.right)})"
    if isinstance(node, Pow):
        exp = str(node.exponent) if node.exponent >= 0 else f"({node.exponent})"
        return f"({to_source(node.base)})^{exp}"
    if isinstance(node, Call):
        return f"{node.name}({to_source(node.arg)})"
    raise TypeError(f"not an expression node: {node!r}")


def depth(node: Node) -> int:
    if isinstance(node, (Num, Var)):
        return 1
    if isinstance(node, BinOp):
        return 1 + max(depth(node.left), depth(node.right))
    if isinstance(node, Neg):
        return 1 + depth(node.operand)
    if isinstance(node, Pow):
        return 1 + depth(node.base)
    return 1 + depth(node.arg)


@dataclass(frozen=True)
class HoloExpr:
    ast: Node
    arity: int
    source: str = ""

    def __str__(self) -> str:
        return to_source(self.ast)


# ---------------------------------------------------------------------------
# Lexer / parser

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>\*\*|[-+*/^(),])
    """,
    re.VERBOSE,
)
_PHI_RE = re.compile(r"phi(\d+)\Z")


@dataclass
class _Token:
    kind: str
    text: str
    pos: int


def _tokenize(source: str) -> list[_Token]:
    tokens = []
    pos = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {source[pos]!r}", pos)
        kind = m.lastgroup
        if kind != "ws":
            text = m.group()
            if text == "**":
                text = "^"
            tokens.append(_Token(kind, text, pos))
        pos = m.end()
    tokens.append(_Token("end", "", len(source)))
    return tokens


class _Parser:
    def __init__(self, source: str, arity: int):
        self.tokens = _tokenize(source)
        self.i = 0
        self.arity = arity

    @property
    def tok(self) -> _Token:
        return self.tokens[self.i]

    def advance(self) -> _Token:
        t = self.tokens[self.i]
        self.i += 1
        return t

    def expect(self, text: str) -> _Token:
        if self.tok.text != text or self.tok.kind == "end":
            found = self.tok.text or "end of input"
            raise ExprSyntaxError(f"expected {text!r}, found {found!r}", self.tok.pos)
        return self.advance()

    def parse(self) -> Node:
        node = self.expr()
        if self.tok.kind != "end":
            raise ExprSyntaxError(f"unexpected {self.tok.text!r}", self.tok.pos)
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.advance().text
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.tok.kind == "op" and self.tok.text in ("*", "/"):
            op = self.advance().text
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Node:
        if self.tok.kind == "op" and self.tok.text == "-":
            self.advance()
            return Neg(self.unary())
        if self.tok.kind == "op" and self.tok.text == "+":
            self.advance()
            return self.unary()
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        if self.tok.kind == "op" and self.tok.text == "^":
            self.advance()
            return Pow(base, self.exponent())
        return base

    def exponent(self) -> int:
        start = self.tok.pos
        paren = self.tok.text == "("
        if paren:
            self.advance()
        sign = 1
        if self.tok.text == "-":
            self.advance()
            sign = -1
        t = self.tok
        if t.kind != "num" or not t.text.isdigit():
            raise ExprSyntaxError("exponent must be an integer literal", start)
        self.advance()
        value = int(t.text)
        if self.tok.text == "^":  # 2^3^2 == 2^(3^2), still an integer literal chain
            self.advance()
            outer = self.exponent()
            if outer < 0:
                raise ExprSyntaxError("exponent must be an integer literal", start)
            value = value**outer
        if paren:
            self.expect(")")
        if abs(value) > MAX_EXPONENT:
            raise ExprSyntaxError(f"exponent larger than {MAX_EXPONENT}", start)
        return sign * value

    def atom(self) -> Node:
        t = self.tok
        if t.kind == "num":
            self.advance()
            value = float(t.text)
            if not math.isfinite(value):
                raise ExprSyntaxError(f"literal {t.text} overflows", t.pos)
            return Num(complex(value))
        if t.kind == "name":
            self.advance()
            if self.tok.text == "(":
                return self.call(t)
            if t.text == "i":
                return Num(1j)
            m = _PHI_RE.match(t.text)
            if m:
                index = int(m.group(1))
                if not 1 <= index <= self.arity:
                    raise ArityError(
                        f"variable {t.text} out of range phi1..phi{self.arity} "
                        f"(at position {t.pos})"
                    )
                return Var(index)
            raise ExprSyntaxError(f"unknown name {t.text!r}", t.pos)
        if t.text == "(":
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        found = t.text or "end of input"
        raise ExprSyntaxError(f"unexpected {found!r}", t.pos)

    def call(self, name: _Token) -> Node:
        if name.text.lower() in NON_HOLOMORPHIC:
            raise NonHolomorphicError(
                f"{name.text}() is not holomorphic (at position {name.pos})"
            )
        if name.text not in FUNCTIONS:
            raise NonHolomorphicError(
                f"unknown function {name.text!r} (at position {name.pos}); "
                f"allowed: {', '.join(FUNCTIONS)}"
            )
        self.expect("(")
        arg = self.expr()
        self.expect(")")
        return Call(name.text, arg)


def parse(source: str, arity: int) -> HoloExpr:
    """Parse ``source`` as a holomorphic function of ``phi1 .. phi{arity}``."""
    if arity < 1:
        raise ValueError(f"arity must be positive, got {arity}")
    if not source or not source.strip():
        raise ExprSyntaxError("empty expression", 0)
    return HoloExpr(_Parser(source, arity).parse(), arity, source)


# ---------------------------------------------------------------------------
# Second-order jets

class Jet:
    """Truncated Taylor expansion ``v + g.d + d.H.d / 2`` in k complex directions."""

    __slots__ = ("v", "g", "h")

    def __init__(self, v: complex, g: np.ndarray, h: np.ndarray):
        self.v = v
        self.g = g
        self.h = h

    @classmethod
    def constant(cls, v: complex, k: int) -> "Jet":
        return cls(complex(v), np.zeros(k, complex), np.zeros((k, k), complex))

    @classmethod
    def variable(cls, v: complex, j: int, k: int) -> "Jet":
        g = np.zeros(k, complex)
        g[j] = 1.0
        return cls(complex(v), g, np.zeros((k, k), complex))

    def __add__(self, other: "Jet") -> "Jet":
        return Jet(self.v + other.v, self.g + other.g, self.h + other.h)

    def __sub__(self, other: "Jet") -> "Jet":
        return Jet(self.v - other.v, self.g - other.g, self.h - other.h)

    def __neg__(self) -> "Jet":
        return Jet(-self.v, -self.g, -self.h)

    def __mul__(self, other: "Jet") -> "Jet":
        # outer(a, b) + outer(b, a) is bitwise symmetric: same two products,
        # summed in swapped order
        cross = np.multiply.outer(self.g, other.g)
        return Jet(
            self.v * other.v,
            self.v * other.g + other.v * self.g,
            self.v * other.h + other.v * self.h + (cross + cross.T),
        )

    def chain(self, f0: complex, f1: complex, f2: complex) -> "Jet":
        """Compose a scalar function with value/derivatives f0, f1, f2 at self.v."""
        return Jet(f0, f1 * self.g, f1 * self.h + f2 * np.multiply.outer(self.g, self.g))


def _reciprocal(x: Jet, where: Node) -> Jet:
    if x.v == 0:
        raise EvalDomainError("division by zero", to_source(where))
    r = 1.0 / x.v
    return x.chain(r, -r * r, 2.0 * r * r * r)


def _powi(x: Jet, n: int, where: Node) -> Jet:
    if n < 0:
        if x.v == 0:
            raise EvalDomainError("negative power of zero", to_source(where))
        return _reciprocal(_powi(x, -n, where), where)
    result = Jet.constant(1.0, len(x.g))
    base = x
    while n:
        if n & 1:
            result = result * base
        n >>= 1
        if n:
            base = base * base
    return result


def _call(name: str, x: Jet, where: Node) -> Jet:
    v = x.v
    if name == "exp":
        e = cmath.exp(v) if v.real < 709.0 else complex(math.inf)
        return x.chain(e, e, e)
    if name == "sin":
        s, c = cmath.sin(v), cmath.cos(v)
        return x.chain(s, c, -s)
    if name == "cos":
        s, c = cmath.sin(v), cmath.cos(v)
        return x.chain(c, -s, -c)
    if name == "log":
        if v == 0:
            raise EvalDomainError("log branch point", to_source(where))
        r = 1.0 / v
        return x.chain(cmath.log(v), r, -r * r)
    raise NonHolomorphicError(f"unknown function {name!r}")


def _eval(node: Node, phi: tuple[complex, ...], k: int) -> Jet:
    if isinstance(node, Var):
        return Jet.variable(phi[node.index - 1], node.index - 1, k)
    if isinstance(node, Num):
        return Jet.constant(node.value, k)
    if isinstance(node, BinOp):
        a = _eval(node.left, phi, k)
        b = _eval(node.right, phi, k)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        return a * _reciprocal(b, node.right)
    if isinstance(node, Neg):
        return -_eval(node.operand, phi, k)
    if isinstance(node, Pow):
        return _powi(_eval(node.base, phi, k), node.exponent, node)
    if isinstance(node, Call):
        return _call(node.name, _eval(node.arg, phi, k), node)
    raise TypeError(f"not an expression node: {node!r}")


@dataclass(frozen=True)
class EvalResult:
    value: complex
    grad: np.ndarray  # (k,) complex, F_i
    hess: np.ndarray  # (k, k) complex, F_ij


def evaluate(expr: HoloExpr, phi) -> EvalResult:
    """Value, gradient and Hessian of ``expr`` at the complex point ``phi``."""
    phi = tuple(complex(p) for p in np.ravel(phi))
    if len(phi) != expr.arity:
        raise ValueError(f"expected {expr.arity} components, got {len(phi)}")
    with np.errstate(all="ignore"):  # overflow surfaces as the non-finite check below
        jet = _eval(expr.ast, phi, expr.arity)
    if not (cmath.isfinite(jet.v) and np.isfinite(jet.g).all() and np.isfinite(jet.h).all()):
        raise EvalDomainError("non-finite result", to_source(expr.ast))
    return EvalResult(jet.v, jet.g, jet.h)
