"""Dense multivariate truncated Taylor series ("jets").

A jet of order ``k`` at ``x0`` stores ``c[alpha] = d^alpha g(x0) / alpha!``
for every multi-index with ``|alpha| <= k``.  Coefficient arrays carry an
optional trailing batch shape so one jet can represent the same field at
many points (quadrature nodes, audit samples) at once.

Arithmetic between jets of different order truncates to the lower order,
which is how operator compositions keep their derivative budget honest.
"""
from __future__ import annotations

from math import factorial

import numpy as np

from . import _kernels
from ._tables import factorials, index_of, lower_table, multi_indices, ncoef
from .expr import Binary, ComplexExpr, Const, Expr, ExprError, Pow, Unary, Var, check_dim, to_text


class JetError(ExprError):
    pass


class JetDomainError(JetError):
    pass


class OrderError(JetError):
    pass


def _is_scalar(v) -> bool:
    return isinstance(v, (int, float, complex, np.number, np.ndarray)) and not isinstance(v, bool)


class Jet:
    __slots__ = ("c", "dim", "order")
    __array_priority__ = 100  # keep ndarray * Jet dispatching to Jet

    def __init__(self, c: np.ndarray, dim: int, order: int):
        if c.shape[0] != ncoef(dim, order):
            raise JetError(f"expected {ncoef(dim, order)} coefficients, got {c.shape[0]}")
        self.c = c
        self.dim = dim
        self.order = order

    # -------------------------------------------------------- construction
    @classmethod
    def constant(cls, value, dim: int, order: int, batch=()) -> "Jet":
        value = np.asarray(value)
        batch = np.broadcast_shapes(tuple(batch), value.shape)
        c = np.zeros((ncoef(dim, order),) + batch, dtype=np.result_type(value, float))
        c[0] = value
        return cls(c, dim, order)

    @classmethod
    def variable(cls, i: int, point, order: int) -> "Jet":
        point = np.asarray(point, dtype=float)
        dim = point.shape[-1]
        c = np.zeros((ncoef(dim, order),) + point.shape[:-1])
        c[0] = point[..., i]
        if order >= 1:
            c[1 + i] = 1.0
        return cls(c, dim, order)

    # ------------------------------------------------------------- access
    @property
    def batch_shape(self) -> tuple:
        return self.c.shape[1:]

    @property
    def value(self):
        v = self.c[0]
        return v.item() if v.ndim == 0 else v

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.c)

    def copy(self) -> "Jet":
        return Jet(self.c.copy(), self.dim, self.order)

    def truncate(self, order: int) -> "Jet":
        if order > self.order:
            raise OrderError(f"cannot raise jet order {self.order} to {order}")
        if order == self.order:
            return self
        return Jet(self.c[: ncoef(self.dim, order)], self.dim, order)

    def derivatives(self) -> np.ndarray:
        """All partial derivatives ``d^alpha g`` in storage order."""
        f = factorials(self.dim, self.order).reshape((-1,) + (1,) * len(self.batch_shape))
        return self.c * f

    def grad(self) -> np.ndarray:
        if self.order < 1:
            raise OrderError("gradient needs order >= 1")
        return self.c[1 : 1 + self.dim].copy()

    def hessian(self) -> np.ndarray:
        if self.order < 2:
            raise OrderError("hessian needs order >= 2")
        lookup = index_of(self.dim, self.order)
        out = np.empty((self.dim, self.dim) + self.batch_shape, dtype=self.c.dtype)
        for i in range(self.dim):
            for j in range(self.dim):
                alpha = [0] * self.dim
                alpha[i] += 1
                alpha[j] += 1
                out[i, j] = self.c[lookup[tuple(alpha)]] * (2.0 if i == j else 1.0)
        return out

    def __repr__(self):
        return f"Jet(dim={self.dim}, order={self.order}, batch={self.batch_shape}, value={self.value!r})"

    # --------------------------------------------------------- arithmetic
    def _coerce(self, other):
        if isinstance(other, Jet):
            if other.dim != self.dim:
                raise JetError("jet dimension mismatch")
            order = min(self.order, other.order)
            return self.truncate(order), other.truncate(order)
        if _is_scalar(other):
            return self, other
        return NotImplemented

    def __add__(self, other):
        co = self._coerce(other)
        if co is NotImplemented:
            return co
        a, b = co
        if isinstance(b, Jet):
            return Jet(a.c + b.c, a.dim, a.order)
        c = a.c.astype(np.result_type(a.c, b), copy=True)
        shape_b = np.shape(b)
        if shape_b and shape_b != a.batch_shape:
            c = np.broadcast_to(c, (c.shape[0],) + np.broadcast_shapes(a.batch_shape, shape_b)).copy()
        c[0] += b
        return Jet(c, a.dim, a.order)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.c, self.dim, self.order)

    def __sub__(self, other):
        if isinstance(other, Jet) or _is_scalar(other):
            return self + (-other)
        return NotImplemented

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        co = self._coerce(other)
        if co is NotImplemented:
            return co
        a, b = co
        if not isinstance(b, Jet):
            return Jet(a.c * b, a.dim, a.order)
        return Jet(_mul(a.c, b.c, a.dim, a.order), a.dim, a.order)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * reciprocal(other)
        if _is_scalar(other):
            return Jet(self.c / other, self.dim, self.order)
        return NotImplemented

    def __rtruediv__(self, other):
        return reciprocal(self) * other

    def __pow__(self, k):
        return power(self, k)

    def conj(self) -> "Jet":
        return Jet(np.conj(self.c), self.dim, self.order)

    @property
    def real(self) -> "Jet":
        return Jet(self.c.real.copy(), self.dim, self.order)

    @property
    def imag(self) -> "Jet":
        return Jet(self.c.imag.copy(), self.dim, self.order)


def _mul(a: np.ndarray, b: np.ndarray, dim: int, order: int) -> np.ndarray:
    n = a.shape[0]
    if a.shape == b.shape:
        batch = a.shape[1:]
        a2, b2 = a.reshape(n, -1), b.reshape(n, -1)
    else:
        batch = np.broadcast_shapes(a.shape[1:], b.shape[1:])
        a2 = np.broadcast_to(a, (n,) + batch).reshape(n, -1)
        b2 = np.broadcast_to(b, (n,) + batch).reshape(n, -1)
    return _kernels.mul_coeffs(a2, b2, dim, order).reshape((n,) + batch)


# ------------------------------------------------------------- operations


def partial(j: Jet, alpha) -> np.ndarray | float:
    """The derivative ``d^alpha g`` (not the Taylor coefficient)."""
    alpha = tuple(int(a) for a in alpha)
    if len(alpha) != j.dim:
        raise JetError(f"multi-index {alpha} has wrong length for dimension {j.dim}")
    if sum(alpha) > j.order:
        raise OrderError(f"|alpha| = {sum(alpha)} exceeds jet order {j.order}")
    k = index_of(j.dim, j.order)[alpha]
    scale = 1.0
    for a in alpha:
        scale *= factorial(a)
    v = j.c[k] * scale
    return v.item() if np.ndim(v) == 0 else v


def lower(j: Jet, axis: int) -> Jet:
    """Jet of ``d g / d x_axis``, one order lower."""
    if j.order < 1:
        raise OrderError("order budget exhausted: cannot differentiate an order-0 jet")
    if not 0 <= axis < j.dim:
        raise JetError(f"axis {axis} out of range")
    src, fac = lower_table(j.dim, j.order, axis)
    f = fac.reshape((-1,) + (1,) * len(j.batch_shape))
    return Jet(j.c[src] * f, j.dim, j.order - 1)


def gradient(j: Jet) -> list[Jet]:
    return [lower(j, i) for i in range(j.dim)]


def _compose(h: Jet, coeffs) -> Jet:
    """``sum_m coeffs[m] * (h - h0)^m`` by Horner's rule."""
    k = h.order
    if k == 0:
        return Jet.constant(coeffs[0], h.dim, 0, h.batch_shape)
    hbar = h.copy()
    hbar.c[0] = 0.0
    out = hbar * coeffs[k] + coeffs[k - 1]
    for m in range(k - 2, -1, -1):
        out = out * hbar + coeffs[m]
    return out


def _h0(h: Jet) -> np.ndarray:
    return np.asarray(h.c[0])


def reciprocal(h: Jet) -> Jet:
    h0 = _h0(h)
    if np.any(h0 == 0):
        raise JetDomainError("division by zero")
    inv = 1.0 / h0
    coeffs = [(-1.0) ** m * inv ** (m + 1) for m in range(h.order + 1)]
    return _compose(h, coeffs)


def _real_h0(h: Jet, name: str) -> np.ndarray:
    if h.is_complex:
        raise JetError(f"{name} is only defined for real jets")
    return _h0(h)


def sqrt(h: Jet) -> Jet:
    h0 = _real_h0(h, "sqrt")
    if np.any(h0 < 0) or (h.order > 0 and np.any(h0 == 0)):
        raise JetDomainError("sqrt of nonpositive argument")
    s = np.sqrt(h0)
    if h.order == 0:
        return Jet.constant(s, h.dim, 0, h.batch_shape)
    coeffs = []
    binom = 1.0
    inv = 1.0 / h0
    for m in range(h.order + 1):
        coeffs.append(s * binom * inv**m)
        binom *= (0.5 - m) / (m + 1)
    return _compose(h, coeffs)


def exp(h: Jet) -> Jet:
    e = np.exp(_real_h0(h, "exp"))
    return _compose(h, [e / factorial(m) for m in range(h.order + 1)])


def log(h: Jet) -> Jet:
    h0 = _real_h0(h, "log")
    if np.any(h0 <= 0):
        raise JetDomainError("log of nonpositive argument")
    coeffs = [np.log(h0)]
    for m in range(1, h.order + 1):
        coeffs.append((-1.0) ** (m + 1) / (m * h0**m))
    return _compose(h, coeffs)


def sin(h: Jet) -> Jet:
    h0 = _real_h0(h, "sin")
    cyc = [np.sin(h0), np.cos(h0), -np.sin(h0), -np.cos(h0)]
    return _compose(h, [cyc[m % 4] / factorial(m) for m in range(h.order + 1)])


def cos(h: Jet) -> Jet:
    h0 = _real_h0(h, "cos")
    cyc = [np.cos(h0), -np.sin(h0), -np.cos(h0), np.sin(h0)]
    return _compose(h, [cyc[m % 4] / factorial(m) for m in range(h.order + 1)])


def power(h: Jet, n: int) -> Jet:
    if not isinstance(n, (int, np.integer)):
        raise JetError("only integer powers are supported")
    n = int(n)
    if n == 0:
        return Jet.constant(np.ones(h.batch_shape), h.dim, h.order)
    if n < 0:
        return power(reciprocal(h), -n)
    if n <= 3:
        out = h
        for _ in range(n - 1):
            out = out * h
        return out
    h0 = _h0(h)
    coeffs = []
    binom = 1.0
    for m in range(h.order + 1):
        coeffs.append(binom * h0 ** (n - m) if m <= n else np.zeros_like(h0))
        binom *= (n - m) / (m + 1)
    return _compose(h, coeffs)


_UNARY = {"sqrt": sqrt, "exp": exp, "log": log, "sin": sin, "cos": cos}


def evaluate(e: Expr | ComplexExpr, point, order: int) -> Jet:
    """Jet of ``e`` at ``point`` (shape ``(dim,)`` or batched ``(..., dim)``)."""
    if order < 0:
        raise OrderError("order must be nonnegative")
    point = np.asarray(point, dtype=float)
    if point.ndim == 0:
        point = point.reshape(1)
    if isinstance(e, ComplexExpr):
        re_ = evaluate(e.re, point, order)
        if isinstance(e.im, Const) and e.im.value == 0.0:
            return Jet(re_.c.astype(complex), re_.dim, order)
        im_ = evaluate(e.im, point, order)
        return Jet(re_.c + 1j * im_.c, re_.dim, order)
    dim = point.shape[-1]
    check_dim(e, dim)
    batch = point.shape[:-1]
    memo: dict[int, Jet] = {}

    def operand(node: Expr):
        # constants stay plain scalars inside arithmetic
        return node.value if isinstance(node, Const) else go(node)

    def go(node: Expr) -> Jet:
        key = id(node)
        if key in memo:
            return memo[key]
        if isinstance(node, Const):
            out = Jet.constant(np.full(batch, node.value), dim, order)
        elif isinstance(node, Var):
            out = Jet.variable(node.index, point, order)
        else:
            try:
                if isinstance(node, Unary):
                    a = go(node.arg)
                    out = -a if node.op == "neg" else _UNARY[node.op](a)
                elif isinstance(node, Binary):
                    a, b = operand(node.left), operand(node.right)
                    if not isinstance(a, Jet) and not isinstance(b, Jet):
                        a = go(node.left)
                    if node.op == "/" and not isinstance(b, Jet) and b == 0:
                        raise JetDomainError("division by zero")
                    if node.op == "+":
                        out = a + b
                    elif node.op == "-":
                        out = a - b
                    elif node.op == "*":
                        out = a * b
                    else:
                        out = a / b
                elif isinstance(node, Pow):
                    out = power(go(node.base), node.exponent)
                else:
                    raise JetError(f"unknown node {node!r}")
            except JetDomainError as err:
                if getattr(err, "located", False):
                    raise
                located = JetDomainError(f"{err} in subexpression {to_text(node)}")
                located.located = True
                raise located from None
        memo[key] = out
        return out

    return go(e)


__all__ = [
    "Jet",
    "JetError",
    "JetDomainError",
    "OrderError",
    "evaluate",
    "partial",
    "lower",
    "gradient",
    "reciprocal",
    "sqrt",
    "exp",
    "log",
    "sin",
    "cos",
    "power",
    "multi_indices",
]
