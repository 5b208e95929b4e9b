"""Immutable expression trees over ambient coordinates.

Expressions define surface functions, chart maps, potentials and test
wavefunctions.  They are never differentiated symbolically; derivatives come
from jet evaluation (see :mod:`geoaudit.jet`).
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Sequence

import numpy as np

UNARY_OPS = ("neg", "sqrt", "exp", "log", "sin", "cos")
BINARY_OPS = ("+", "-", "*", "/")
FUNCTIONS = ("sqrt", "exp", "log", "sin", "cos")
VAR_NAMES = ("x", "y", "z", "w")


class ExprError(ValueError):
    pass


class ParseError(ExprError):
    def __init__(self, message: str, pos: int):
        super().__init__(f"{message} at offset {pos}")
        self.pos = pos


class Expr:
    """Base node.  Supports Python operator syntax for building trees."""

    __slots__ = ()

    def __add__(self, other):
        return Binary("+", self, as_expr(other))

    def __radd__(self, other):
        return Binary("+", as_expr(other), self)

    def __sub__(self, other):
        return Binary("-", self, as_expr(other))

    def __rsub__(self, other):
        return Binary("-", as_expr(other), self)

    def __mul__(self, other):
        return Binary("*", self, as_expr(other))

    def __rmul__(self, other):
        return Binary("*", as_expr(other), self)

    def __truediv__(self, other):
        return Binary("/", self, as_expr(other))

    def __rtruediv__(self, other):
        return Binary("/", as_expr(other), self)

    def __neg__(self):
        return Unary("neg", self)

    def __pow__(self, k):
        if not isinstance(k, (int, np.integer)) or isinstance(k, bool):
            raise ExprError("only integer powers are supported")
        return Pow(self, int(k))

    def __str__(self):
        return to_text(self)


@dataclass(frozen=True, eq=False, repr=False)
class Const(Expr):
    value: float

    def __repr__(self):
        return f"Const({self.value!r})"


@dataclass(frozen=True, eq=False, repr=False)
class Var(Expr):
    index: int

    def __post_init__(self):
        if self.index < 0:
            raise ExprError("variable index must be nonnegative")

    def __repr__(self):
        return f"Var({self.index})"


@dataclass(frozen=True, eq=False, repr=False)
class Unary(Expr):
    op: str
    arg: Expr

    def __post_init__(self):
        if self.op not in UNARY_OPS:
            raise ExprError(f"unknown unary op {self.op!r}")

    def __repr__(self):
        return f"Unary({self.op!r}, {self.arg!r})"


@dataclass(frozen=True, eq=False, repr=False)
class Binary(Expr):
    op: str
    left: Expr
    right: Expr

    def __post_init__(self):
        if self.op not in BINARY_OPS:
            raise ExprError(f"unknown binary op {self.op!r}")

    def __repr__(self):
        return f"Binary({self.op!r}, {self.left!r}, {self.right!r})"


@dataclass(frozen=True, eq=False, repr=False)
class Pow(Expr):
    base: Expr
    exponent: int

    def __repr__(self):
        return f"Pow({self.base!r}, {self.exponent})"


@dataclass(frozen=True)
class ComplexExpr:
    """Wavefunction carrier: ``re + i*im`` over a shared ambient dimension."""

    re: Expr
    im: Expr

    @classmethod
    def real(cls, e: Expr | float) -> "ComplexExpr":
        return cls(as_expr(e), Const(0.0))

    def __str__(self):
        return f"({to_text(self.re)}) + i*({to_text(self.im)})"


def as_expr(v) -> Expr:
    if isinstance(v, Expr):
        return v
    if isinstance(v, (int, float, np.integer, np.floating)) and not isinstance(v, bool):
        return Const(float(v))
    raise ExprError(f"cannot convert {v!r} to an expression")


def variables(dim: int) -> tuple[Var, ...]:
    return tuple(Var(i) for i in range(dim))


def sqrt(e):
    return Unary("sqrt", as_expr(e))


def exp(e):
    return Unary("exp", as_expr(e))


def log(e):
    return Unary("log", as_expr(e))


def sin(e):
    return Unary("sin", as_expr(e))


def cos(e):
    return Unary("cos", as_expr(e))


def children(e: Expr) -> tuple[Expr, ...]:
    if isinstance(e, Unary):
        return (e.arg,)
    if isinstance(e, Binary):
        return (e.left, e.right)
    if isinstance(e, Pow):
        return (e.base,)
    return ()


def max_var_index(e: Expr) -> int:
    """Largest variable index used in ``e`` (-1 for a constant expression)."""
    cached = getattr(e, "_max_var", None)
    if cached is not None:
        return cached
    best = -1
    stack = [e]
    seen = set()
    while stack:
        node = stack.pop()
        if id(node) in seen:
            continue
        seen.add(id(node))
        if isinstance(node, Var):
            best = max(best, node.index)
        stack.extend(children(node))
    object.__setattr__(e, "_max_var", best)
    return best


def check_dim(e: Expr, dim: int) -> None:
    k = max_var_index(e)
    if k >= dim:
        raise ExprError(f"variable index {k} out of range for dimension {dim}")


# ---------------------------------------------------------------- parser

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<id>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^()]))"
)


def _tokenize(text: str):
    pos = 0
    tokens = []
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            start = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise ParseError(f"unexpected character {text[start]!r}", start)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


def _variable_index(name: str) -> int | None:
    if name in VAR_NAMES:
        return VAR_NAMES.index(name)
    m = re.fullmatch(r"x([1-9])", name)
    if m:
        return int(m.group(1)) - 1
    return None


class _Parser:
    def __init__(self, text: str, dim: int):
        self.tokens = _tokenize(text)
        self.i = 0
        self.dim = dim

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, val, pos = self.take()
        if val != value:
            raise ParseError(f"expected {value!r}, found {val or 'end of input'!r}", pos)

    def parse(self) -> Expr:
        e = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected token {val!r}", pos)
        return e

    def expr(self) -> Expr:
        e = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            e = Binary(op, e, self.term())
        return e

    def term(self) -> Expr:
        e = self.factor()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            e = Binary(op, e, self.factor())
        return e

    def factor(self) -> Expr:
        kind, val, pos = self.peek()
        if kind == "op" and val == "-":
            self.take()
            return Unary("neg", self.factor())
        base = self.atom()
        if self.peek()[1] == "^":
            self.take()
            return Pow(base, self.integer())
        return base

    def integer(self) -> int:
        sign = 1
        kind, val, pos = self.take()
        if kind == "op" and val == "-":
            sign = -1
            kind, val, pos = self.take()
        if kind != "num" or not val.isdigit():
            raise ParseError("exponent must be an integer literal", pos)
        return sign * int(val)

    def atom(self) -> Expr:
        kind, val, pos = self.take()
        if kind == "num":
            return Const(float(val))
        if kind == "op" and val == "(":
            e = self.expr()
            self.expect(")")
            return e
        if kind == "id":
            if val in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Unary(val, arg)
            if val == "pi":
                return Const(math.pi)
            idx = _variable_index(val)
            if idx is None:
                raise ParseError(f"unknown identifier {val!r}", pos)
            if idx >= self.dim:
                raise ParseError(f"variable {val!r} exceeds dimension {self.dim}", pos)
            return Var(idx)
        raise ParseError(f"unexpected token {val or 'end of input'!r}", pos)


def parse_expr(text: str, dim: int) -> Expr:
    """Parse ``text`` into an expression over ``dim`` ambient coordinates.

    Precedence, tightest first: ``^`` (integer exponent), unary minus,
    ``* /``, ``+ -``; binary operators associate left.  Variables are
    ``x, y, z, w`` or ``x1 .. x9`` (one-based).
    """
    if dim < 1:
        raise ExprError("dimension must be >= 1")
    return _Parser(text, dim).parse()


def _var_name(i: int) -> str:
    return VAR_NAMES[i] if i < len(VAR_NAMES) else f"x{i + 1}"


def to_text(e: Expr) -> str:
    """Print ``e`` in the parser's grammar (fully parenthesized)."""
    if isinstance(e, Const):
        v = e.value
        if v == math.pi:
            return "pi"
        s = repr(float(v))
        if s in ("inf", "-inf", "nan"):
            raise ExprError(f"cannot print non-finite constant {v}")
        return f"(-{s[1:]})" if s.startswith("-") else s
    if isinstance(e, Var):
        return _var_name(e.index)
    if isinstance(e, Unary):
        if e.op == "neg":
            return f"(-{to_text(e.arg)})"
        return f"{e.op}({to_text(e.arg)})"
    if isinstance(e, Binary):
        return f"({to_text(e.left)} {e.op} {to_text(e.right)})"
    if isinstance(e, Pow):
        return f"({to_text(e.base)})^{e.exponent}"
    raise ExprError(f"unknown node {e!r}")


# ------------------------------------------------------ substitution / eval


def substitute(e: Expr, subs: Sequence[Expr], dim_out: int) -> Expr:
    """Replace variable ``i`` of ``e`` by ``subs[i]``."""
    k = max_var_index(e)
    if len(subs) <= k:
        raise ExprError(f"arity mismatch: expression uses variable {k}, got {len(subs)} substitutes")
    subs = [as_expr(s) for s in subs]
    for s in subs:
        check_dim(s, dim_out)
    memo: dict[int, Expr] = {}

    def go(node: Expr) -> Expr:
        key = id(node)
        if key in memo:
            return memo[key]
        if isinstance(node, Var):
            out = subs[node.index]
        elif isinstance(node, Const):
            out = node
        elif isinstance(node, Unary):
            out = Unary(node.op, go(node.arg))
        elif isinstance(node, Binary):
            out = Binary(node.op, go(node.left), go(node.right))
        elif isinstance(node, Pow):
            out = Pow(go(node.base), node.exponent)
        else:
            raise ExprError(f"unknown node {node!r}")
        memo[key] = out
        return out

    return go(e)


_NUMPY_UNARY = {
    "neg": np.negative,
    "sqrt": np.sqrt,
    "exp": np.exp,
    "log": np.log,
    "sin": np.sin,
    "cos": np.cos,
}


def evaluate(e: Expr, points) -> np.ndarray | float:
    """Evaluate ``e`` numerically.

    ``points`` has shape ``(..., dim)``; the result has shape ``(...)``.
    Domain violations raise :class:`ExprError` instead of producing NaN.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 0:
        pts = pts.reshape(1)
    check_dim(e, pts.shape[-1])
    shape = pts.shape[:-1]
    memo: dict[int, np.ndarray] = {}

    def go(node: Expr):
        key = id(node)
        if key in memo:
            return memo[key]
        if isinstance(node, Const):
            out = np.full(shape, node.value)
        elif isinstance(node, Var):
            out = pts[..., node.index]
        elif isinstance(node, Unary):
            a = go(node.arg)
            if node.op == "sqrt" and np.any(a < 0):
                raise ExprError(f"sqrt of negative value in {to_text(node)}")
            if node.op == "log" and np.any(a <= 0):
                raise ExprError(f"log of nonpositive value in {to_text(node)}")
            out = _NUMPY_UNARY[node.op](a)
        elif isinstance(node, Binary):
            a, b = go(node.left), go(node.right)
            if node.op == "+":
                out = a + b
            elif node.op == "-":
                out = a - b
            elif node.op == "*":
                out = a * b
            else:
                if np.any(b == 0):
                    raise ExprError(f"division by zero in {to_text(node)}")
                out = a / b
        elif isinstance(node, Pow):
            a = go(node.base)
            if node.exponent < 0:
                if np.any(a == 0):
                    raise ExprError(f"negative power of zero in {to_text(node)}")
                out = 1.0 / a ** (-node.exponent)
            else:
                out = a**node.exponent
        else:
            raise ExprError(f"unknown node {node!r}")
        memo[key] = out
        return out

    out = go(e)
    return float(out) if out.ndim == 0 else out
