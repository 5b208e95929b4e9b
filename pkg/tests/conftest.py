import sys

import mpmath
import numpy as np
import pytest

from geoaudit import expr as ex
from geoaudit import _kernels

mpmath.mp.dps = 40


def mp_eval(e, point):
    """Independent high-precision evaluator used as a derivative oracle."""
    if isinstance(e, ex.Const):
        return mpmath.mpf(e.value)
    if isinstance(e, ex.Var):
        return point[e.index]
    if isinstance(e, ex.Unary):
        a = mp_eval(e.arg, point)
        return -a if e.op == "neg" else getattr(mpmath, e.op)(a)
    if isinstance(e, ex.Binary):
        a, b = mp_eval(e.left, point), mp_eval(e.right, point)
        return {"+": a + b, "-": a - b, "*": a * b, "/": a / b}[e.op]
    if isinstance(e, ex.Pow):
        return mp_eval(e.base, point) ** e.exponent
    raise TypeError(e)


def mp_partial(e, point, alpha):
    """``d^alpha e`` at ``point`` by high-precision numerical differentiation."""
    point = [mpmath.mpf(float(v)) for v in point]
    dim = len(point)
    return float(mpmath.diff(lambda *xs: mp_eval(e, list(xs)), point, tuple(alpha)) if dim > 1 else
                 mpmath.diff(lambda t: mp_eval(e, [t]), point[0], alpha[0]))


def fd_partial(e, point, alpha, h=1e-5):
    """Plain double-precision central differences (first and second order only)."""
    point = np.asarray(point, dtype=float)
    f = lambda q: float(ex.evaluate(e, q))  # noqa: E731
    axes = [i for i, a in enumerate(alpha) for _ in range(a)]
    if len(axes) == 1:
        d = np.zeros_like(point)
        d[axes[0]] = h
        return (f(point + d) - f(point - d)) / (2 * h)
    if len(axes) == 2:
        h = 1e-4
        di = np.zeros_like(point)
        dj = np.zeros_like(point)
        di[axes[0]] = h
        dj[axes[1]] = h
        return (f(point + di + dj) - f(point + di - dj) - f(point - di + dj) + f(point - di - dj)) / (4 * h * h)
    raise ValueError("only first and second differences")


def random_expr(rng, dim, depth=3):
    """A random composite expression that is smooth on the box [-1, 1]^dim."""
    X = ex.variables(dim)
    if depth == 0:
        if rng.random() < 0.7:
            return X[int(rng.integers(dim))]
        return ex.Const(round(float(rng.uniform(-2, 2)), 3))
    g = random_expr(rng, dim, depth - 1)
    kind = int(rng.integers(10))
    if kind == 0:
        return ex.sin(g)
    if kind == 1:
        return ex.cos(g)
    if kind == 2:
        return ex.exp(ex.sin(g))
    if kind == 3:
        return ex.sqrt(1.5 + ex.sin(g))
    if kind == 4:
        return ex.log(2.0 + ex.cos(g))
    if kind == 5:
        return g ** int(rng.integers(2, 5))
    if kind == 6:
        return 1.0 / (1.5 + ex.cos(g))
    h = random_expr(rng, dim, depth - 1)
    return [g + h, g - h, g * h][kind - 7]


@pytest.fixture(params=_kernels.available_backends())
def backend(request):
    previous = _kernels.get_backend()
    _kernels.set_backend(request.param)
    yield request.param
    _kernels.set_backend(previous)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
