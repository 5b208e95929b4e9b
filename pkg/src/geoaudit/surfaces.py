"""Catalog of level-set hypersurfaces with charts and quadrature."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import expr as ex
from . import jet
from .expr import ComplexExpr, Expr

SURFACE_TOL = 1e-10


class SurfaceError(ValueError):
    pass


@dataclass(frozen=True)
class Chart:
    """Parametrization ``u -> map(u)`` of (part of) a surface.

    ``map`` and ``area_element`` are expressions in the chart parameters,
    which play the role of variables ``x1 .. x(N-1)``.
    """

    map: tuple[Expr, ...]
    lower: tuple[float, ...]
    upper: tuple[float, ...]
    periodic: tuple[bool, ...]
    area_element: Expr

    @property
    def param_dim(self) -> int:
        return len(self.lower)

    def points(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        return np.stack([np.broadcast_to(ex.evaluate(m, u), u.shape[:-1]) for m in self.map], axis=-1)

    def area(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        return np.broadcast_to(ex.evaluate(self.area_element, u), u.shape[:-1])


@dataclass(frozen=True)
class SurfaceSpec:
    name: str
    dim: int
    levelset: Expr
    sdf: bool
    charts: tuple[Chart, ...]
    params: dict = field(default_factory=dict)

    def f(self, points) -> np.ndarray:
        return ex.evaluate(self.levelset, points)

    def describe(self) -> dict:
        return {
            "name": self.name,
            "dim": self.dim,
            "params": dict(self.params),
            "sdf": self.sdf,
            "levelset": ex.to_text(self.levelset),
        }


def _positive(params, *names):
    for k in names:
        if k not in params:
            raise SurfaceError(f"missing parameter {k!r}")
        v = params[k]
        if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
            raise SurfaceError(f"parameter {k!r} must be a positive number, got {v!r}")


def _norm(vs):
    return ex.sqrt(sum((v**2 for v in vs[1:]), vs[0] ** 2))


def builtin_surface(name: str, params: dict | None = None, dim: int | None = None) -> SurfaceSpec:
    """Build a catalog surface.

    ``plane`` (f = x_N), ``circle``/``sphere`` (f = |x| - r), ``cylinder``
    (f = rho - a), ``torus`` (tube distance minus a) are signed distances;
    ``ellipsoid`` is a plain level set with ``|grad f| != 1``.
    """
    params = dict(params or {})
    pi2 = 2.0 * math.pi
    if name == "plane":
        N = dim or 3
        if N not in (2, 3, 4):
            raise SurfaceError("plane supports dim 2, 3, 4")
        h = params.setdefault("half_width", 1.0)
        _positive(params, "half_width")
        X = ex.variables(N)
        u = ex.variables(N - 1)
        chart = Chart(
            map=tuple(u) + (ex.Const(0.0),),
            lower=(-h,) * (N - 1),
            upper=(h,) * (N - 1),
            periodic=(False,) * (N - 1),
            area_element=ex.Const(1.0),
        )
        return SurfaceSpec("plane", N, X[N - 1], True, (chart,), params)

    if name in ("circle", "sphere"):
        N = dim or (2 if name == "circle" else 3)
        if name == "circle" and N != 2:
            raise SurfaceError("circle requires dim 2")
        if N not in (2, 3, 4):
            raise SurfaceError("sphere supports dim 2, 3, 4")
        params.setdefault("r", 1.0)
        _positive(params, "r")
        r = float(params["r"])
        X = ex.variables(N)
        f = _norm(X) - r
        if N == 2:
            (t,) = ex.variables(1)
            chart = Chart((r * ex.cos(t), r * ex.sin(t)), (0.0,), (pi2,), (True,), ex.Const(r))
        elif N == 3:
            th, ph = ex.variables(2)
            chart = Chart(
                (r * ex.sin(th) * ex.cos(ph), r * ex.sin(th) * ex.sin(ph), r * ex.cos(th)),
                (0.0, 0.0),
                (math.pi, pi2),
                (False, True),
                r**2 * ex.sin(th),
            )
        else:
            ch, th, ph = ex.variables(3)
            chart = Chart(
                (
                    r * ex.cos(ch),
                    r * ex.sin(ch) * ex.cos(th),
                    r * ex.sin(ch) * ex.sin(th) * ex.cos(ph),
                    r * ex.sin(ch) * ex.sin(th) * ex.sin(ph),
                ),
                (0.0, 0.0, 0.0),
                (math.pi, math.pi, pi2),
                (False, False, True),
                r**3 * ex.sin(ch) ** 2 * ex.sin(th),
            )
        return SurfaceSpec(name, N, f, True, (chart,), params)

    if name == "cylinder":
        if dim not in (None, 3):
            raise SurfaceError("cylinder requires dim 3")
        params.setdefault("a", 1.0)
        params.setdefault("height", 2.0)
        _positive(params, "a", "height")
        a, hz = float(params["a"]), float(params["height"])
        x, y, z = ex.variables(3)
        t, s = ex.variables(2)
        chart = Chart(
            (a * ex.cos(t), a * ex.sin(t), s),
            (0.0, -hz / 2),
            (pi2, hz / 2),
            (True, False),
            ex.Const(a),
        )
        return SurfaceSpec("cylinder", 3, ex.sqrt(x**2 + y**2) - a, True, (chart,), params)

    if name == "torus":
        if dim not in (None, 3):
            raise SurfaceError("torus requires dim 3")
        params.setdefault("R0", 2.0)
        params.setdefault("a", 0.5)
        _positive(params, "R0", "a")
        R0, a = float(params["R0"]), float(params["a"])
        if a >= R0:
            raise SurfaceError(f"torus needs a < R0, got a={a}, R0={R0}")
        x, y, z = ex.variables(3)
        th, ph = ex.variables(2)
        ring = R0 + a * ex.cos(th)
        chart = Chart(
            (ring * ex.cos(ph), ring * ex.sin(ph), a * ex.sin(th)),
            (0.0, 0.0),
            (pi2, pi2),
            (True, True),
            a * ring,
        )
        f = ex.sqrt((ex.sqrt(x**2 + y**2) - R0) ** 2 + z**2) - a
        return SurfaceSpec("torus", 3, f, True, (chart,), params)

    if name == "ellipsoid":
        if dim not in (None, 3):
            raise SurfaceError("ellipsoid requires dim 3")
        for k, v in (("a", 1.0), ("b", 1.5), ("c", 2.0)):
            params.setdefault(k, v)
        _positive(params, "a", "b", "c")
        a, b, c = (float(params[k]) for k in "abc")
        x, y, z = ex.variables(3)
        th, ph = ex.variables(2)
        st, ct, sp, cp = ex.sin(th), ex.cos(th), ex.sin(ph), ex.cos(ph)
        area = st * ex.sqrt(
            (b * c) ** 2 * st**2 * cp**2 + (a * c) ** 2 * st**2 * sp**2 + (a * b) ** 2 * ct**2
        )
        chart = Chart(
            (a * st * cp, b * st * sp, c * ct),
            (0.0, 0.0),
            (math.pi, pi2),
            (False, True),
            area,
        )
        f = x**2 / a**2 + y**2 / b**2 + z**2 / c**2 - 1.0
        return SurfaceSpec("ellipsoid", 3, f, False, (chart,), params)

    raise SurfaceError(f"unknown surface {name!r}")


BUILTIN_NAMES = ("plane", "circle", "sphere", "cylinder", "torus", "ellipsoid")


def custom_surface(
    levelset: str | Expr,
    dim: int,
    charts: Sequence[Chart],
    sdf: bool = False,
    name: str = "custom",
) -> SurfaceSpec:
    f = ex.parse_expr(levelset, dim) if isinstance(levelset, str) else levelset
    ex.check_dim(f, dim)
    for ch in charts:
        if len(ch.map) != dim or ch.param_dim != dim - 1:
            raise SurfaceError("chart must map N-1 parameters to N coordinates")
    return SurfaceSpec(name, dim, f, sdf, tuple(charts), {})


# ------------------------------------------------------------- sampling


def sample_points(spec: SurfaceSpec, count: int, seed: int = 0) -> np.ndarray:
    """``count`` surface points from uniform parameter draws (deterministic per seed)."""
    if count < 1:
        raise SurfaceError("count must be >= 1")
    rng = np.random.default_rng(seed)
    which = rng.integers(len(spec.charts), size=count) if len(spec.charts) > 1 else np.zeros(count, int)
    out = np.empty((count, spec.dim))
    for k, ch in enumerate(spec.charts):
        sel = which == k
        lo, hi = np.array(ch.lower), np.array(ch.upper)
        u = lo + (hi - lo) * rng.random((int(sel.sum()), ch.param_dim))
        if sel.any():
            out[sel] = ch.points(u)
    return out


@dataclass
class ValidationReport:
    surface: dict
    n_samples: int
    seed: int
    max_abs_f: float
    max_grad_defect: float | None
    max_chart_residual: float
    min_area_element: float
    failures: list
    max_area_defect: float = math.nan  # |area_element - sqrt(det J^T J)| / max(1, metric)

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["passed"] = self.passed
        return d


def grad_norm(spec: SurfaceSpec, points) -> np.ndarray:
    j = jet.evaluate(spec.levelset, points, 1)
    return np.sqrt(np.sum(j.grad() ** 2, axis=0))


def metric_area(ch: Chart, u) -> np.ndarray:
    """``sqrt(det(J^T J))`` for the chart Jacobian ``J`` at parameters ``u``."""
    u = np.atleast_2d(np.asarray(u, dtype=float))
    J = np.stack([np.broadcast_to(jet.evaluate(m, u, 1).grad(), (ch.param_dim, len(u))) for m in ch.map])
    G = np.einsum("kib,kjb->bij", J, J)
    return np.sqrt(np.linalg.det(G))


def _open_grid(ch: Chart, per_axis: int) -> np.ndarray:
    axes = []
    for lo, hi in zip(ch.lower, ch.upper):
        axes.append(lo + (hi - lo) * (np.arange(per_axis) + 0.5) / per_axis)
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)


def validate_surface(spec: SurfaceSpec, n_samples: int = 200, seed: int = 0) -> ValidationReport:
    failures = []
    if not spec.charts:
        return ValidationReport(spec.describe(), 0, seed, math.nan, None, math.nan, math.nan, ["no charts"])
    pts = sample_points(spec, n_samples, seed)
    max_f = float(np.max(np.abs(spec.f(pts))))
    if max_f > SURFACE_TOL:
        failures.append(f"max |f| on samples {max_f:.3e} > {SURFACE_TOL}")

    grad_defect = None
    if spec.sdf:
        j = jet.evaluate(spec.levelset, pts, 1)
        g = j.grad()
        nvec = (g / np.sqrt(np.sum(g**2, axis=0))).T
        probes = [pts, pts + 0.05 * nvec, pts - 0.05 * nvec]
        grad_defect = max(float(np.max(np.abs(grad_norm(spec, q) - 1.0))) for q in probes)
        if grad_defect > SURFACE_TOL:
            failures.append(f"max ||grad f| - 1| {grad_defect:.3e} > {SURFACE_TOL}")

    chart_res, min_area, area_defect = 0.0, math.inf, 0.0
    for ch in spec.charts:
        u = _open_grid(ch, 12 if ch.param_dim < 3 else 6)
        chart_res = max(chart_res, float(np.max(np.abs(spec.f(ch.points(u))))))
        area = ch.area(u)
        min_area = min(min_area, float(np.min(area)))
        metric = metric_area(ch, u)
        area_defect = max(area_defect, float(np.max(np.abs(area - metric) / np.maximum(1.0, metric))))
    if chart_res > SURFACE_TOL:
        failures.append(f"chart grid violates f = 0 by {chart_res:.3e}")
    if not min_area > 0:
        failures.append(f"area element not positive (min {min_area:.3e})")
    if area_defect > SURFACE_TOL:
        failures.append(f"area element differs from the chart metric by {area_defect:.3e}")
    return ValidationReport(
        spec.describe(), n_samples, seed, max_f, grad_defect, chart_res, min_area, failures, area_defect
    )


# ------------------------------------------------------------ quadrature


@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray  # (B, N) ambient nodes
    weights: np.ndarray  # (B,) weights including the area element


def _axis_rule(lo: float, hi: float, periodic: bool, n: int):
    if periodic:
        x = lo + (hi - lo) * np.arange(n) / n
        w = np.full(n, (hi - lo) / n)
    else:
        t, w = np.polynomial.legendre.leggauss(n)
        x = 0.5 * (hi - lo) * t + 0.5 * (hi + lo)
        w = 0.5 * (hi - lo) * w
    return x, w


def quadrature_rule(spec: SurfaceSpec, resolution: int) -> QuadratureRule:
    """Tensor rule per chart: Gauss-Legendre on bounded axes, trapezoid on periodic ones."""
    if resolution < 4:
        raise SurfaceError("resolution must be >= 4")
    pts, wts = [], []
    for ch in spec.charts:
        rules = [_axis_rule(lo, hi, per, resolution) for lo, hi, per in zip(ch.lower, ch.upper, ch.periodic)]
        xs = np.meshgrid(*[r[0] for r in rules], indexing="ij")
        ws = np.meshgrid(*[r[1] for r in rules], indexing="ij")
        u = np.stack([x.ravel() for x in xs], axis=-1)
        w = np.prod([x.ravel() for x in ws], axis=0)
        pts.append(ch.points(u))
        wts.append(w * ch.area(u))
    return QuadratureRule(np.concatenate(pts), np.concatenate(wts))


Integrand = Callable[[np.ndarray], np.ndarray] | Expr | ComplexExpr | float


def field_values(integrand: Integrand, points: np.ndarray) -> np.ndarray:
    if isinstance(integrand, ComplexExpr):
        return np.broadcast_to(ex.evaluate(integrand.re, points), points.shape[:-1]) + 1j * np.broadcast_to(
            ex.evaluate(integrand.im, points), points.shape[:-1]
        )
    if isinstance(integrand, Expr):
        return np.broadcast_to(ex.evaluate(integrand, points), points.shape[:-1])
    if callable(integrand):
        return np.asarray(integrand(points))
    return np.full(points.shape[:-1], integrand)


def integrate(spec: SurfaceSpec, integrand: Integrand, resolution: int = 64):
    rule = quadrature_rule(spec, resolution)
    return np.sum(rule.weights * field_values(integrand, rule.points))


def inner_product(spec: SurfaceSpec, phi: Integrand, psi: Integrand, resolution: int = 64) -> complex:
    """``<phi, psi> = integral of conj(phi) * psi dA`` over the surface."""
    rule = quadrature_rule(spec, resolution)
    a = field_values(phi, rule.points)
    b = field_values(psi, rule.points)
    return complex(np.sum(rule.weights * np.conj(a) * b))
