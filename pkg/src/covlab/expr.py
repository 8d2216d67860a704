"""Closed-form scalar expressions over box coordinates.

The node set is fixed: constants, coordinates, +, -, *, /, integer powers,
sin, cos, exp, sqrt.  It is closed under differentiation and substitution,
which is how transported solutions and fibre-metric derivatives stay exactly
representable.  Expressions evaluate over any scalar ring that supports the
arithmetic (floats, Taylor values), so the same tree yields plain values or
exact jets depending on what is fed in.

Serialized form is prefix notation with parentheses, e.g. ``(* (sin x0) x1)``.
Coordinates are written ``x0, x1, ...`` (an ``u`` prefix is accepted on input
for maps whose domain is conventionally written with u's).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

from .errors import DomainError
from .taylor import gcos, gexp, gsin, gsqrt


class Expr:
    """Base class; concrete nodes implement ``ev`` and ``diff``."""

    def ev(self, coords):
        raise NotImplementedError

    def diff(self, var: int) -> "Expr":
        raise NotImplementedError

    def subst(self, repl: dict[int, "Expr"]) -> "Expr":
        raise NotImplementedError

    def to_prefix(self, var: str = "x") -> str:
        raise NotImplementedError

    def __repr__(self):
        return f"<Expr {self.to_prefix()}>"


@dataclass(frozen=True)
class Const(Expr):
    value: float

    def ev(self, coords):
        return self.value

    def diff(self, var):
        return Const(0.0)

    def subst(self, repl):
        return self

    def to_prefix(self, var="x"):
        v = self.value
        if v == int(v) and abs(v) < 1e15:
            return repr(int(v))
        return repr(v)


@dataclass(frozen=True)
class Var(Expr):
    index: int

    def ev(self, coords):
        return coords[self.index]

    def diff(self, var):
        return Const(1.0 if var == self.index else 0.0)

    def subst(self, repl):
        return repl.get(self.index, self)

    def to_prefix(self, var="x"):
        return f"{var}{self.index}"


def _is_const(e: Expr, v: float | None = None) -> bool:
    return isinstance(e, Const) and (v is None or e.value == v)


def add(a: Expr, b: Expr) -> Expr:
    if _is_const(a) and _is_const(b):
        return Const(a.value + b.value)
    if _is_const(a, 0.0):
        return b
    if _is_const(b, 0.0):
        return a
    return Add(a, b)


def sub(a: Expr, b: Expr) -> Expr:
    if _is_const(a) and _is_const(b):
        return Const(a.value - b.value)
    if _is_const(b, 0.0):
        return a
    return Sub(a, b)


def mul(a: Expr, b: Expr) -> Expr:
    if _is_const(a) and _is_const(b):
        return Const(a.value * b.value)
    if _is_const(a, 0.0) or _is_const(b, 0.0):
        return Const(0.0)
    if _is_const(a, 1.0):
        return b
    if _is_const(b, 1.0):
        return a
    return Mul(a, b)


def div(a: Expr, b: Expr) -> Expr:
    if _is_const(a, 0.0):
        return Const(0.0)
    if _is_const(b, 1.0):
        return a
    return Div(a, b)


@dataclass(frozen=True)
class Add(Expr):
    a: Expr
    b: Expr

    def ev(self, coords):
        return self.a.ev(coords) + self.b.ev(coords)

    def diff(self, var):
        return add(self.a.diff(var), self.b.diff(var))

    def subst(self, repl):
        return add(self.a.subst(repl), self.b.subst(repl))

    def to_prefix(self, var="x"):
        return f"(+ {self.a.to_prefix(var)} {self.b.to_prefix(var)})"


@dataclass(frozen=True)
class Sub(Expr):
    a: Expr
    b: Expr

    def ev(self, coords):
        return self.a.ev(coords) - self.b.ev(coords)

    def diff(self, var):
        return sub(self.a.diff(var), self.b.diff(var))

    def subst(self, repl):
        return sub(self.a.subst(repl), self.b.subst(repl))

    def to_prefix(self, var="x"):
        return f"(- {self.a.to_prefix(var)} {self.b.to_prefix(var)})"


@dataclass(frozen=True)
class Mul(Expr):
    a: Expr
    b: Expr

    def ev(self, coords):
        return self.a.ev(coords) * self.b.ev(coords)

    def diff(self, var):
        return add(mul(self.a.diff(var), self.b), mul(self.a, self.b.diff(var)))

    def subst(self, repl):
        return mul(self.a.subst(repl), self.b.subst(repl))

    def to_prefix(self, var="x"):
        return f"(* {self.a.to_prefix(var)} {self.b.to_prefix(var)})"


@dataclass(frozen=True)
class Div(Expr):
    a: Expr
    b: Expr

    def ev(self, coords):
        den = self.b.ev(coords)
        if isinstance(den, float) and abs(den) < 1e-150:
            raise DomainError("division by zero in expression")
        try:
            return self.a.ev(coords) / den
        except ZeroDivisionError as exc:
            raise DomainError("division by zero in expression") from exc

    def diff(self, var):
        # (a/b)' = a'/b - a b' / b^2
        return sub(
            div(self.a.diff(var), self.b),
            div(mul(self.a, self.b.diff(var)), mul(self.b, self.b)),
        )

    def subst(self, repl):
        return div(self.a.subst(repl), self.b.subst(repl))

    def to_prefix(self, var="x"):
        return f"(/ {self.a.to_prefix(var)} {self.b.to_prefix(var)})"


@dataclass(frozen=True)
class Pow(Expr):
    base: Expr
    k: int

    def ev(self, coords):
        return self.base.ev(coords) ** self.k

    def diff(self, var):
        if self.k == 0:
            return Const(0.0)
        inner = self.base.diff(var)
        body = self.base if self.k == 2 else Pow(self.base, self.k - 1)
        if self.k == 1:
            return inner
        return mul(Const(float(self.k)), mul(body, inner))

    def subst(self, repl):
        return Pow(self.base.subst(repl), self.k)

    def to_prefix(self, var="x"):
        return f"(pow {self.base.to_prefix(var)} {self.k})"


@dataclass(frozen=True)
class Sin(Expr):
    a: Expr

    def ev(self, coords):
        return gsin(self.a.ev(coords))

    def diff(self, var):
        return mul(Cos(self.a), self.a.diff(var))

    def subst(self, repl):
        return Sin(self.a.subst(repl))

    def to_prefix(self, var="x"):
        return f"(sin {self.a.to_prefix(var)})"


@dataclass(frozen=True)
class Cos(Expr):
    a: Expr

    def ev(self, coords):
        return gcos(self.a.ev(coords))

    def diff(self, var):
        return mul(Const(-1.0), mul(Sin(self.a), self.a.diff(var)))

    def subst(self, repl):
        return Cos(self.a.subst(repl))

    def to_prefix(self, var="x"):
        return f"(cos {self.a.to_prefix(var)})"


@dataclass(frozen=True)
class Exp(Expr):
    a: Expr

    def ev(self, coords):
        return gexp(self.a.ev(coords))

    def diff(self, var):
        return mul(Exp(self.a), self.a.diff(var))

    def subst(self, repl):
        return Exp(self.a.subst(repl))

    def to_prefix(self, var="x"):
        return f"(exp {self.a.to_prefix(var)})"


@dataclass(frozen=True)
class Sqrt(Expr):
    a: Expr

    def ev(self, coords):
        return gsqrt(self.a.ev(coords))

    def diff(self, var):
        return div(self.a.diff(var), mul(Const(2.0), Sqrt(self.a)))

    def subst(self, repl):
        return Sqrt(self.a.subst(repl))

    def to_prefix(self, var="x"):
        return f"(sqrt {self.a.to_prefix(var)})"


# ---- parsing ---------------------------------------------------------------

_TOKEN = re.compile(r"\(|\)|[^\s()]+")
_VAR = re.compile(r"^[xu](\d+)$")
_NUMBER = re.compile(r"^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$")

_BINOPS = {"+": add, "-": sub, "*": mul, "/": div}
_UNOPS = {"sin": Sin, "cos": Cos, "exp": Exp, "sqrt": Sqrt}


def parse(text: str) -> Expr:
    """Parse prefix notation into an Expr tree.

    Raises ValueError on malformed input (unknown token, arity mismatch,
    non-integer power exponent, trailing garbage).
    """
    tokens = _TOKEN.findall(text)
    if not tokens:
        raise ValueError("empty expression")
    pos = 0

    def next_token() -> str:
        nonlocal pos
        if pos >= len(tokens):
            raise ValueError("unexpected end of expression")
        tok = tokens[pos]
        pos += 1
        return tok

    def parse_one() -> Expr:
        tok = next_token()
        if tok == ")":
            raise ValueError("unexpected ')'")
        if tok != "(":
            return parse_atom(tok)
        head = next_token()
        if head in _BINOPS:
            a = parse_one()
            b = parse_one()
            node = _BINOPS[head](a, b)
        elif head in _UNOPS:
            node = _UNOPS[head](parse_one())
        elif head == "pow":
            base = parse_one()
            etok = next_token()
            try:
                k = int(etok)
            except ValueError:
                raise ValueError(f"power exponent must be an integer, got {etok!r}")
            node = Pow(base, k)
        else:
            raise ValueError(f"unknown operator {head!r}")
        if next_token() != ")":
            raise ValueError("missing ')'")
        return node

    def parse_atom(tok: str) -> Expr:
        m = _VAR.match(tok)
        if m:
            return Var(int(m.group(1)))
        if _NUMBER.match(tok):
            return Const(float(tok))
        raise ValueError(f"unknown token {tok!r}")

    node = parse_one()
    if pos != len(tokens):
        raise ValueError(f"trailing input after expression: {tokens[pos:]}")
    return node


def max_var_index(e: Expr) -> int:
    """Largest variable index appearing in the expression, -1 for constants."""
    if isinstance(e, Var):
        return e.index
    if isinstance(e, (Add, Sub, Mul, Div)):
        return max(max_var_index(e.a), max_var_index(e.b))
    if isinstance(e, Pow):
        return max_var_index(e.base)
    if isinstance(e, (Sin, Cos, Exp, Sqrt)):
        return max_var_index(e.a)
    return -1


def const(v: float) -> Const:
    return Const(float(v))


def var(i: int) -> Var:
    return Var(i)
