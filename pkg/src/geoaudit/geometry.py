"""Extrinsic geometry of level-set surfaces from jets of the surface function.

Conventions: ``n`` points along ``+grad f``; ``gradN[i][j] = d_j n_i``;
``hessN[i][j][k] = d_k d_j n_i``; mean curvature ``M = -div n``;
``K = gradN : gradN``.  All fields are jets at the evaluation point(s), so
operators can keep differentiating them.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import jet
from .jet import Jet, OrderError, lower
from .surfaces import SURFACE_TOL, SurfaceSpec


class GeometryError(ValueError):
    pass


@dataclass(frozen=True)
class OperatorParams:
    """Selects the Hamiltonian family member ``(xi, eta)`` and constants."""

    xi: float = 0.0
    eta: float = 0.0
    hbar: float = 1.0
    mu: float = 1.0

    def __post_init__(self):
        if not (self.hbar > 0 and self.mu > 0):
            raise GeometryError("hbar and mu must be positive")

    def with_family(self, xi: float, eta: float) -> "OperatorParams":
        return OperatorParams(xi, eta, self.hbar, self.mu)

    def to_dict(self) -> dict:
        return {"xi": self.xi, "eta": self.eta, "hbar": self.hbar, "mu": self.mu}


# (xi, eta): bare Laplace-Beltrami, p^2/2mu, confining-potential (thin layer)
PRESETS = {"laplace_beltrami": (0.0, 0.0), "p_squared": (0.0, 1.0), "confining": (2.0, 1.0)}


@dataclass
class GeoJet:
    point: np.ndarray
    sdf: bool
    n: list
    gradN: list
    M: Jet
    K: Jet
    hessN: list | None = None
    gradM: list | None = None
    lapM: Jet | None = None

    @property
    def dim(self) -> int:
        return len(self.n)

    @property
    def order(self) -> int:
        """Order of the normal field jets."""
        return self.n[0].order

    def require(self, *names: str) -> None:
        for name in names:
            if getattr(self, name) is None:
                raise GeometryError(
                    f"field {name!r} unavailable (needs a signed-distance surface and a larger order budget)"
                )

    def values(self) -> dict:
        out = {
            "n": np.array([c.value for c in self.n]),
            "gradN": np.array([[c.value for c in row] for row in self.gradN]),
            "M": np.asarray(self.M.value),
            "K": np.asarray(self.K.value),
        }
        if self.gradM is not None:
            out["gradM"] = np.array([c.value for c in self.gradM])
        if self.lapM is not None:
            out["lapM"] = np.asarray(self.lapM.value)
        if self.hessN is not None:
            out["hessN"] = np.array([[[c.value for c in r2] for r2 in r1] for r1 in self.hessN])
        return out


def surface_jet(spec: SurfaceSpec, x, order: int, check: bool = True) -> Jet:
    f = jet.evaluate(spec.levelset, x, order)
    if check:
        off = float(np.max(np.abs(f.c[0])))
        if off > SURFACE_TOL:
            raise GeometryError(f"point is off the surface (|f| = {off:.3e})")
    return f


def geometry_from_jet(f: Jet, sdf: bool, point=None) -> GeoJet:
    if f.order < 2:
        raise OrderError("geometry needs a surface-function jet of order >= 2")
    N = f.dim
    g = jet.gradient(f)
    if sdf:
        n = g
    else:
        norm = jet.sqrt(sum((gi * gi for gi in g[1:]), g[0] * g[0]))
        inv = jet.reciprocal(norm)
        n = [gi * inv for gi in g]
    gradN = [[lower(n[i], j) for j in range(N)] for i in range(N)]
    M = -sum((gradN[i][i] for i in range(1, N)), gradN[0][0])
    K = sum((gradN[i][j] * gradN[i][j] for i in range(N) for j in range(N)))
    geo = GeoJet(np.asarray(point) if point is not None else None, sdf, n, gradN, M, K)
    if sdf and f.order >= 3:
        geo.hessN = [[[lower(gradN[i][j], k) for k in range(N)] for j in range(N)] for i in range(N)]
        geo.gradM = [lower(M, i) for i in range(N)]
        if f.order >= 4:
            geo.lapM = sum((lower(geo.gradM[i], i) for i in range(1, N)), lower(geo.gradM[0], 0))
    return geo


def geometry_at(spec: SurfaceSpec, x, order_budget: int = 5, check: bool = True) -> GeoJet:
    """Geometry fields at surface point(s) ``x`` from an order-``order_budget`` jet of f."""
    f = surface_jet(spec, x, order_budget, check)
    return geometry_from_jet(f, spec.sdf, x)


def geometric_potential(geo: GeoJet, params: OperatorParams) -> Jet:
    """``V_G = -(hbar^2 / 8 mu) (xi K - eta M^2)``."""
    c = -(params.hbar**2) / (8.0 * params.mu)
    return (geo.K * params.xi - geo.M * geo.M * params.eta) * c


def _tangential(v: list, n: list) -> list:
    nv = sum((n[i] * v[i] for i in range(1, len(n))), n[0] * v[0])
    return [v[k] - n[k] * nv for k in range(len(n))]


def residual_terms(geo: GeoJet) -> dict:
    """The three vector fields whose combination is the analytic residual.

    ``normal = n lapM``;
    ``xi_term = (gradN : hess) n - n (gradN : (n . hessN))``, i.e. the
    tangential part of ``sum_ij (d_j n_i)(d_i d_j n_k)``;
    ``eta_term = M (lap n - n (n . lap n))``, which for a signed distance
    equals ``-M grad_S M``.
    """
    geo.require("hessN", "lapM")
    if not geo.sdf:
        raise GeometryError("analytic residual requires a signed-distance surface")
    N = geo.dim
    n, B, H = geo.n, geo.gradN, geo.hessN
    v = [
        sum((B[i][j] * H[k][i][j] for i in range(N) for j in range(N)))
        for k in range(N)
    ]
    s = sum((B[i][j] * n[l] * H[i][j][l] for i in range(N) for j in range(N) for l in range(N)))
    xi_term = [v[k] - n[k] * s for k in range(N)]
    lap_n = [sum((H[k][j][j] for j in range(1, N)), H[k][0][0]) for k in range(N)]
    eta_term = [geo.M * t for t in _tangential(lap_n, n)]
    normal = [n[k] * geo.lapM for k in range(N)]
    as_values = lambda vec: np.array([np.real(c.value) for c in vec])  # noqa: E731
    return {"normal": as_values(normal), "xi": as_values(xi_term), "eta": as_values(eta_term)}


def residual_force_analytic(geo: GeoJet, params: OperatorParams, terms: dict | None = None) -> np.ndarray:
    """Closed-form Ehrenfest residual ``F`` at the geometry's point(s).

    ``F = -(hbar^2/4mu) [ n lapM + (2 - xi) T_xi + (1 - eta) T_eta ]``
    with the bracketed fields from :func:`residual_terms`.
    """
    t = terms if terms is not None else residual_terms(geo)
    c = -(params.hbar**2) / (4.0 * params.mu)
    return c * (t["normal"] + (2.0 - params.xi) * t["xi"] + (1.0 - params.eta) * t["eta"])


def _tangent_check(geo: GeoJet, v: np.ndarray, what: str) -> np.ndarray:
    n = np.array([np.real(c.value) for c in geo.n])
    v = np.asarray(v, dtype=float)
    if np.ndim(n) != 1:
        raise GeometryError("expected geometry at a single point")
    if abs(v @ n) > 1e-10 * max(1.0, np.linalg.norm(v)):
        raise GeometryError(f"{what} is not tangent to the surface (n.v = {v @ n:.3e})")
    return v


def normal_curvature(geo: GeoJet, direction) -> float:
    """``t^T gradN t`` for a unit tangent ``t`` (positive on spheres with outward n)."""
    t = _tangent_check(geo, direction, "direction")
    if abs(np.linalg.norm(t) - 1.0) > 1e-10:
        raise GeometryError("direction must be a unit vector")
    B = np.array([[c.value for c in row] for row in geo.gradN])
    return float(t @ B @ t)


def classical_S(geo: GeoJet, p, mu: float) -> float:
    """``S = p_i (d_j n_i) p_j / (2 mu)``."""
    p = np.asarray(p, dtype=float)
    B = np.array([[c.value for c in row] for row in geo.gradN])
    return float(p @ B @ p) / (2.0 * mu)


def principal_curvatures(geo: GeoJet) -> np.ndarray:
    """Eigenvalues of the Weingarten map on the tangent space (single point)."""
    vals = geo.values()
    n, B = vals["n"], vals["gradN"]
    if n.ndim != 1:
        raise GeometryError("expected geometry at a single point")
    P = np.eye(len(n)) - np.outer(n, n)
    Bt = P @ B @ P
    Bt = 0.5 * (Bt + Bt.T)
    w, V = np.linalg.eigh(Bt)
    drop = int(np.argmax(np.abs(V.T @ n)))
    return np.sort(np.delete(w, drop))
