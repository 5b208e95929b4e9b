"""Quantum operators on a hypersurface, acting on complex jets.

Every operator consumes derivative orders from its input jet: the tangential
gradient and the geometric momentum consume one, the Laplace-Beltrami
operator, the Hamiltonian and the centripetal operator ``S`` consume two.
Geometry jets must carry at least as many orders as the operator output
needs; anything less raises :class:`~geoaudit.jet.OrderError` rather than
silently truncating.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import jet
from .expr import Binary, ComplexExpr, Expr
from .geometry import GeoJet, GeometryError, OperatorParams, geometric_potential, geometry_at
from .jet import Jet, OrderError
from .surfaces import SurfaceSpec

PSI_ORDER = 4
F_ORDER = 5
MIN_PSI = 1e-6


class SmallWavefunctionError(ValueError):
    """The test wavefunction (nearly) vanishes at an evaluation point."""


@dataclass(frozen=True)
class WaveField:
    psi: ComplexExpr
    label: str = ""
    seed: int | None = None

    @classmethod
    def real(cls, e: Expr, label: str = "") -> "WaveField":
        return cls(ComplexExpr.real(e), label)


def _need(field: Jet, order: int, what: str) -> None:
    if field.order < order:
        raise OrderError(f"{what} available to order {field.order}, operator needs {order}")


def _dot(a: list, b: list) -> Jet:
    return sum((a[i] * b[i] for i in range(1, len(a))), a[0] * b[0])


def grad_S(g: Jet, geo: GeoJet) -> list:
    """Tangential gradient ``d_i g - n_i (n . grad g)``; consumes one order."""
    if g.order < 1:
        raise OrderError("order budget exhausted: tangential gradient needs order >= 1")
    _need(geo.n[0], g.order - 1, "normal")
    d = jet.gradient(g)
    nd = _dot(geo.n, d)
    return [d[i] - geo.n[i] * nd for i in range(g.dim)]


def div_S(v: list, geo: GeoJet) -> Jet:
    """Tangential divergence ``sum_i (d_i v_i - n_i n . grad v_i)``; consumes one order."""
    if v[0].order < 1:
        raise OrderError("order budget exhausted: tangential divergence needs order >= 1")
    _need(geo.n[0], v[0].order - 1, "normal")
    out = None
    for i, vi in enumerate(v):
        d = jet.gradient(vi)
        term = d[i] - geo.n[i] * _dot(geo.n, d)
        out = term if out is None else out + term
    return out


def apply_grad_S(psi: Jet, geo: GeoJet) -> list:
    return grad_S(psi, geo)


def apply_laplace_beltrami(psi: Jet, geo: GeoJet) -> Jet:
    if psi.order < 2:
        raise OrderError("order budget exhausted: Laplace-Beltrami needs order >= 2")
    return div_S(grad_S(psi, geo), geo)


def apply_p(psi: Jet, geo: GeoJet, params: OperatorParams, mean_term: bool = True) -> list:
    """Geometric momentum ``-i hbar (grad_S + M n / 2)``, per component.

    ``mean_term=False`` drops the ``M n / 2`` part (not hermitian; used to
    show that the term is needed).
    """
    gs = grad_S(psi, geo)
    c = -1j * params.hbar
    if not mean_term:
        return [g * c for g in gs]
    _need(geo.M, psi.order - 1, "mean curvature")
    half_m_psi = geo.M * psi * 0.5
    return [(gs[i] + geo.n[i] * half_m_psi) * c for i in range(psi.dim)]


def p_dot(w: list, geo: GeoJet, params: OperatorParams) -> Jet:
    """``sum_i p_i w_i`` for a vector of scalar fields."""
    _need(geo.M, w[0].order - 1, "mean curvature")
    return (div_S(w, geo) + geo.M * _dot(geo.n, w) * 0.5) * (-1j * params.hbar)


def apply_H(psi: Jet, geo: GeoJet, params: OperatorParams, potential: Jet | None = None) -> Jet:
    """``-(hbar^2/2mu) LB psi + V_G psi`` (plus an optional extra potential)."""
    lb = apply_laplace_beltrami(psi, geo)
    v = geometric_potential(geo, params)
    _need(v, psi.order - 2, "geometric potential")
    if potential is not None:
        v = v + potential
    return lb * (-(params.hbar**2) / (2.0 * params.mu)) + v * psi


def apply_S_quantum(psi: Jet, geo: GeoJet, params: OperatorParams) -> Jet:
    """Centripetal operator ``(1/2mu) p_i n_ij p_j`` with geometric momenta."""
    if not geo.sdf:
        raise GeometryError("quantum S needs a signed-distance surface (symmetric n_ij)")
    if psi.order < 2:
        raise OrderError("order budget exhausted: S needs order >= 2")
    pp = apply_p(psi, geo, params)
    N = psi.dim
    _need(geo.gradN[0][0], psi.order - 1, "Weingarten map")
    w = [_dot(geo.gradN[i], pp) for i in range(N)]
    return p_dot(w, geo, params) * (1.0 / (2.0 * params.mu))


def commutator_residual(psi: Jet, geo: GeoJet, params: OperatorParams, potential: Jet | None = None) -> list:
    """``(1/i hbar)[p, H] psi + (n S + S n) psi`` as jets (not yet divided by psi)."""
    N = psi.dim
    h_psi = apply_H(psi, geo, params, potential)
    p_h = apply_p(h_psi, geo, params)
    h_p = [apply_H(c, geo, params, potential) for c in apply_p(psi, geo, params)]
    s_psi = apply_S_quantum(psi, geo, params)
    s_n = [apply_S_quantum(geo.n[k] * psi, geo, params) for k in range(N)]
    inv = 1.0 / (1j * params.hbar)
    return [(p_h[k] - h_p[k]) * inv + geo.n[k] * s_psi + s_n[k] for k in range(N)]


def _divide(res: list, psi: Jet, on_small: str) -> np.ndarray:
    val = np.asarray(psi.c[0])
    small = np.abs(val) < MIN_PSI
    out = np.array([np.asarray(r.c[0]) for r in res], dtype=complex)
    if np.any(small):
        if on_small == "raise":
            raise SmallWavefunctionError(f"|psi| < {MIN_PSI} at {int(np.sum(small))} point(s)")
        val = np.where(small, np.nan, val)
    with np.errstate(invalid="ignore"):
        return out / val


def residual_operational(
    spec: SurfaceSpec,
    psi: WaveField | ComplexExpr,
    x,
    params: OperatorParams,
    psi_order: int = PSI_ORDER,
    f_order: int = F_ORDER,
    potential: Expr | None = None,
    on_small: str = "raise",
    geo: GeoJet | None = None,
) -> np.ndarray:
    """Ehrenfest residual at surface point(s) ``x``, divided by ``psi(x)``.

    Returns a complex array of shape ``(N,)`` or ``(N, B)`` for batched
    points.  ``on_small="nan"`` marks points where ``|psi| < 1e-6`` with NaN
    instead of raising.
    """
    if psi_order < PSI_ORDER or f_order < F_ORDER:
        raise OrderError(f"residual needs psi order >= {PSI_ORDER} and f order >= {F_ORDER}")
    if not spec.sdf:
        raise GeometryError("the Ehrenfest residual is defined here for signed-distance surfaces only")
    field = psi.psi if isinstance(psi, WaveField) else psi
    if geo is None:
        geo = geometry_at(spec, x, f_order)
    pj = jet.evaluate(field, x, psi_order)
    wj = jet.evaluate(potential, x, psi_order) if potential is not None else None
    return _divide(commutator_residual(pj, geo, params, wj), pj, on_small)


def extend_off_surface(psi: ComplexExpr, spec: SurfaceSpec, chi: Expr) -> ComplexExpr:
    """``psi + f * chi``: same surface values, different ambient extension."""
    return ComplexExpr(Binary("+", psi.re, Binary("*", spec.levelset, chi)), psi.im)
