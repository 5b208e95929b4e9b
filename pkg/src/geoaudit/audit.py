"""Executable audits: Ehrenfest residual, the no-fix theorem, hermiticity.

Two independent routes produce the Ehrenfest residual: the operational one
composes the jet operators of :mod:`geoaudit.qop`, the analytic one
evaluates the closed-form force of :mod:`geoaudit.geometry`.  An audit is
*consistent* when they agree; the *verdict* (Ehrenfest holds or breaks
down) only means something for a consistent run.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from . import jet
from .expr import ComplexExpr, Const, Expr, Var
from .jet import Jet
from .geometry import GeoJet, GeometryError, OperatorParams, geometry_at, geometry_from_jet, residual_force_analytic
from .parallel import map_points
from .qop import (
    MIN_PSI,
    WaveField,
    apply_H,
    apply_laplace_beltrami,
    apply_p,
    apply_S_quantum,
    p_dot,
    residual_operational,
)
from .surfaces import SurfaceSpec, quadrature_rule

VERDICT_TOL = 1e-6
MISMATCH_TOL = 1e-8


class AuditError(RuntimeError):
    pass


def complex_json(z):
    """Arrays of complex numbers as nested lists of ``{"re", "im"}`` pairs."""
    z = np.asarray(z)
    if z.ndim == 0:
        v = complex(z)
        return {"re": v.real, "im": v.imag}
    return [complex_json(v) for v in z]


# ------------------------------------------------------------ Ehrenfest


@dataclass
class ResidualSample:
    index: int
    point: np.ndarray
    F_analytic: np.ndarray
    R_operational: list  # per wavefield; None where |psi| was too small
    mismatch: float
    spread: float

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "point": self.point.tolist(),
            "F_analytic": self.F_analytic.tolist(),
            "abs_F": float(np.linalg.norm(self.F_analytic)),
            "R_operational": [None if r is None else complex_json(r) for r in self.R_operational],
            "mismatch": self.mismatch,
            "spread": self.spread,
        }


@dataclass
class ResidualReport:
    surface: dict
    params: OperatorParams
    wavefields: list
    samples: list
    tol: float = VERDICT_TOL
    mismatch_tol: float = MISMATCH_TOL

    @property
    def max_mismatch(self) -> float:
        return max(s.mismatch for s in self.samples)

    @property
    def max_spread(self) -> float:
        return max(s.spread for s in self.samples)

    @property
    def max_abs_F(self) -> float:
        return max(float(np.linalg.norm(s.F_analytic)) for s in self.samples)

    @property
    def consistent(self) -> bool:
        return self.max_mismatch <= self.mismatch_tol

    @property
    def verdict(self) -> str:
        return "ehrenfest_holds" if self.max_abs_F <= self.tol else "breakdown"

    def to_dict(self) -> dict:
        return {
            "surface": self.surface,
            "params": self.params.to_dict(),
            "wavefields": self.wavefields,
            "samples": [s.to_dict() for s in self.samples],
            "summary": {
                "max_mismatch": self.max_mismatch,
                "max_spread": self.max_spread,
                "max_abs_F": self.max_abs_F,
                "tol": self.tol,
                "mismatch_tol": self.mismatch_tol,
                "consistent": self.consistent,
                "verdict": self.verdict,
            },
        }

    def csv_rows(self):
        yield ["index"] + [f"x{i + 1}" for i in range(len(self.samples[0].point))] + ["abs_F", "mismatch"]
        for s in self.samples:
            yield [s.index] + [repr(float(v)) for v in s.point] + [
                repr(float(np.linalg.norm(s.F_analytic))),
                repr(s.mismatch),
            ]


def _field(w) -> ComplexExpr:
    return w.psi if isinstance(w, WaveField) else w


def _residual_batch(spec, fields, params, pts, potential=None):
    geo = geometry_at(spec, pts, 5)
    F = residual_force_analytic(geo, params)
    Rs = [residual_operational(spec, f, pts, params, potential=potential, on_small="nan", geo=geo) for f in fields]
    return geo, F, Rs


def ehrenfest_audit(
    spec: SurfaceSpec,
    params: OperatorParams,
    wavefields,
    points,
    tol: float = VERDICT_TOL,
    mismatch_tol: float = MISMATCH_TOL,
) -> ResidualReport:
    """Compare the operational and analytic residuals at every point.

    ``mismatch`` is ``max |R - F|`` over wavefields and components, relative
    to ``max(1, |F|)``; ``spread`` is the largest difference between the
    residuals of two wavefields (the residual should not depend on psi).
    """
    if not spec.sdf:
        raise GeometryError("Ehrenfest audit requires a signed-distance surface")
    if len(wavefields) < 2:
        raise AuditError("need at least two wavefields")
    fields = [_field(w) for w in wavefields]
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    n_pts = len(pts)

    def run(chunk):
        _, F, Rs = _residual_batch(spec, fields, params, chunk)
        return np.concatenate([F[None].astype(complex)] + [R[None] for R in Rs], axis=0)

    stacked = map_points(run, pts, chunk=64)  # (1 + nψ, N, B)
    F_all = stacked[0].real
    samples = []
    for b in range(n_pts):
        F = F_all[:, b]
        Rs = [None if np.any(np.isnan(stacked[1 + k][:, b])) else stacked[1 + k][:, b] for k in range(len(fields))]
        valid = [r for r in Rs if r is not None]
        if not valid:
            raise AuditError(f"every wavefield has |psi| < {MIN_PSI} at point {b}")
        scale = max(1.0, float(np.linalg.norm(F)))
        mismatch = max(float(np.max(np.abs(r - F))) for r in valid) / scale
        spread = max((float(np.max(np.abs(a - c))) for a, c in itertools.combinations(valid, 2)), default=0.0)
        samples.append(ResidualSample(b, pts[b], F, Rs, mismatch, spread))
    labels = [
        {"label": getattr(w, "label", ""), "re": str(_field(w).re), "im": str(_field(w).im)} for w in wavefields
    ]
    return ResidualReport(spec.describe(), params, labels, samples, tol, mismatch_tol)


@dataclass
class NoFixReport:
    max_shift_error: float  # max |Delta + grad_S W|
    max_normal_shift: float  # max |n . Delta|
    max_tangential_residual: float  # max |R - n (n . R)| for the unshifted residual
    shift_tol: float = 1e-8
    normal_tol: float = 1e-10
    tangential_tol: float = 1e-9

    @property
    def passed(self) -> bool:
        return (
            self.max_shift_error <= self.shift_tol
            and self.max_normal_shift <= self.normal_tol
            and self.max_tangential_residual <= self.tangential_tol
        )

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["passed"] = self.passed
        return d


def no_fix_check(spec: SurfaceSpec, params: OperatorParams, W: Expr, wavefields, points) -> NoFixReport:
    """Adding a potential ``W`` to the confining-potential Hamiltonian only
    shifts the residual by the tangential field ``-(grad W - n (n . grad W))``,
    which can never cancel the normal residual ``-(hbar^2/4mu) n lapM``.
    """
    if (params.xi, params.eta) != (2.0, 1.0):
        raise AuditError("no-fix check is stated for (xi, eta) = (2, 1)")
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    fields = [_field(w) for w in wavefields]
    geo = geometry_at(spec, pts, 5)
    n = np.array([c.value for c in geo.n])
    gw = jet.evaluate(W, pts, 1).grad()
    expected = -(gw - n * np.sum(n * gw, axis=0))
    shift_err = normal_shift = tang = 0.0
    for f in fields:
        R0 = residual_operational(spec, f, pts, params, on_small="nan", geo=geo)
        R1 = residual_operational(spec, f, pts, params, potential=W, on_small="nan", geo=geo)
        ok = ~np.any(np.isnan(R0), axis=0)
        d = (R1 - R0)[:, ok]
        shift_err = max(shift_err, float(np.max(np.abs(d - expected[:, ok]), initial=0.0)))
        normal_shift = max(normal_shift, float(np.max(np.abs(np.sum(n[:, ok] * d, axis=0)), initial=0.0)))
        r = R0[:, ok]
        tang = max(tang, float(np.max(np.abs(r - n[:, ok] * np.sum(n[:, ok] * r, axis=0)), initial=0.0)))
    return NoFixReport(shift_err, normal_shift, tang)


# ----------------------------------------------------------- hermiticity


@dataclass
class OperatorSpec:
    """An operator applied at quadrature nodes: ``apply(psi_jet, f_jet, params)``."""

    name: str
    apply: callable
    psi_order: int
    f_order: int


def _geo(f_jet: Jet, sdf: bool) -> GeoJet:
    return geometry_from_jet(f_jet, sdf)


def _as_list(v):
    return v if isinstance(v, list) else [v]


def qop_operators(sdf: bool = True) -> dict:
    """Operators of the geometric formalism, ready for hermiticity checks."""
    ops = {
        "p": OperatorSpec("p", lambda psi, f, prm: apply_p(psi, _geo(f, sdf), prm), 1, 3),
        "p_no_mean_curvature": OperatorSpec(
            "p_no_mean_curvature", lambda psi, f, prm: apply_p(psi, _geo(f, sdf), prm, mean_term=False), 1, 3
        ),
        "laplace_beltrami": OperatorSpec(
            "laplace_beltrami", lambda psi, f, prm: apply_laplace_beltrami(psi, _geo(f, sdf)), 2, 3
        ),
        "H": OperatorSpec("H", lambda psi, f, prm: apply_H(psi, _geo(f, sdf), prm), 2, 3),
    }
    if sdf:
        ops["S"] = OperatorSpec("S", lambda psi, f, prm: apply_S_quantum(psi, _geo(f, sdf), prm), 2, 3)
    return ops


def _momentum_dot(w: list, geo: GeoJet, params: OperatorParams, momentum: str) -> Jet:
    if momentum == "geometric":
        return p_dot(w, geo, params)
    # bare ambient momentum -i hbar grad
    return sum((jet.lower(w[i], i) for i in range(1, len(w))), jet.lower(w[0], 0)) * (-1j * params.hbar)


def _weinberg_parts(psi: Jet, f: Jet, params: OperatorParams, momentum: str):
    geo = geometry_from_jet(f, sdf=False)
    N = psi.dim
    g = jet.gradient(f)
    q = sum((gi * gi for gi in g[1:]), g[0] * g[0])
    inv_norm = jet.reciprocal(jet.sqrt(q))
    hess = [[jet.lower(g[i], j) for j in range(N)] for i in range(N)]
    return geo, g, q, inv_norm, hess


def weinberg_raw(psi, f, params, momentum="geometric"):
    """``-(grad f / mu |grad f|^2) sum_ij p_i p_j (f_ij psi)``, p's acting rightwards."""
    geo, g, q, _, hess = _weinberg_parts(psi, f, params, momentum)
    N = psi.dim
    inner = [_momentum_dot([hess[i][j] * psi for j in range(N)], geo, params, momentum) for i in range(N)]
    quad = _momentum_dot(inner, geo, params, momentum)
    coef = jet.reciprocal(q) * (-1.0 / params.mu)
    return [g[k] * coef * quad for k in range(N)]


def ordering_2(psi, f, params, momentum="geometric"):
    """``-(1/mu) grad f (p (1/|grad f|) . grad)^2 f`` read left to right."""
    geo, g, q, r, hess = _weinberg_parts(psi, f, params, momentum)
    N = psi.dim
    inner = [r * _momentum_dot([r * hess[i][j] * psi for j in range(N)], geo, params, momentum) for i in range(N)]
    quad = _momentum_dot(inner, geo, params, momentum)
    return [g[k] * quad * (-1.0 / params.mu) for k in range(N)]


def ordering_3(psi, f, params, momentum="geometric"):
    """``-(1/mu) (p (1/|grad f|) . grad)^2 f grad f`` read left to right."""
    geo, g, q, r, hess = _weinberg_parts(psi, f, params, momentum)
    N = psi.dim
    out = []
    for k in range(N):
        gk_psi = g[k] * psi
        inner = [
            r * _momentum_dot([r * hess[i][j] * gk_psi for j in range(N)], geo, params, momentum) for i in range(N)
        ]
        out.append(_momentum_dot(inner, geo, params, momentum) * (-1.0 / params.mu))
    return out


ORDERING_BASES = {"weinberg_raw": weinberg_raw, "oo1": weinberg_raw, "oo2": ordering_2, "oo3": ordering_3}


def operator_values(spec: SurfaceSpec, op: OperatorSpec, psi: ComplexExpr, points, params) -> np.ndarray:
    """``(A psi)(x)`` at every point: complex array of shape ``(components, B)``."""

    def run(chunk):
        pj = jet.evaluate(psi, chunk, op.psi_order)
        fj = jet.evaluate(spec.levelset, chunk, op.f_order)
        out = _as_list(op.apply(pj, fj, params))
        return np.array([np.asarray(c.c[0], dtype=complex) for c in out])

    return map_points(run, np.asarray(points))


def field_on(psi: ComplexExpr, points) -> np.ndarray:
    return jet.evaluate(psi, points, 0).c[0]


@dataclass
class HermiticityEntry:
    operator: str
    defect: np.ndarray  # per component: <phi, A psi> - <A phi, psi>
    defect_swapped: np.ndarray  # same with phi and psi exchanged
    symmetrized: bool = False

    @property
    def max_defect(self) -> float:
        return float(np.max(np.abs(self.defect)))

    def to_dict(self) -> dict:
        return {
            "operator": self.operator,
            "symmetrized": self.symmetrized,
            "defect": complex_json(self.defect),
            "defect_swapped": complex_json(self.defect_swapped),
            "max_abs_defect": self.max_defect,
        }


@dataclass
class HermiticityReport:
    surface: dict
    resolution: int
    params: OperatorParams
    phi: str
    psi: str
    momentum: str
    entries: dict = field(default_factory=dict)
    pairwise: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "surface": self.surface,
            "resolution": self.resolution,
            "params": self.params.to_dict(),
            "trial_pair": {"phi": self.phi, "psi": self.psi},
            "momentum": self.momentum,
            "operators": {k: e.to_dict() for k, e in self.entries.items()},
            "pairwise": {
                k: {"value": complex_json(v), "max_abs": float(np.max(np.abs(v)))} for k, v in self.pairwise.items()
            },
            "notes": list(self.notes),
        }


class _Gram:
    """Inner products ``<A u, v>`` and ``<u, A v>`` for one trial pair on one rule."""

    def __init__(self, spec, phi, psi, resolution, params):
        self.spec = spec
        self.rule = quadrature_rule(spec, resolution)
        self.params = params
        self.fields = {"phi": phi, "psi": psi}
        self.vals = {k: field_on(v, self.rule.points) for k, v in self.fields.items()}
        self.applied = {}

    def apply(self, op: OperatorSpec, which: str) -> np.ndarray:
        key = (op.name, which)
        if key not in self.applied:
            self.applied[key] = operator_values(self.spec, op, self.fields[which], self.rule.points, self.params)
        return self.applied[key]

    def ip(self, a, b) -> np.ndarray:
        return np.sum(self.rule.weights * np.conj(a) * b, axis=-1)

    def left(self, op, u, v):
        """``<u, A v>`` per component."""
        return self.ip(self.vals[u], self.apply(op, v))

    def right(self, op, u, v):
        """``<A u, v>`` per component."""
        return self.ip(self.apply(op, u), self.vals[v])


def _raw_entry(gram: _Gram, op: OperatorSpec) -> HermiticityEntry:
    d = gram.left(op, "phi", "psi") - gram.right(op, "phi", "psi")
    ds = gram.left(op, "psi", "phi") - gram.right(op, "psi", "phi")
    return HermiticityEntry(op.name, d, ds)


def _sym_products(gram: _Gram, op: OperatorSpec, u: str, v: str):
    """``<u, B_sym v>`` and ``<B_sym u, v>`` for ``B_sym = (B + B^dagger)/2``,
    with the adjoint realized by quadrature transposition
    ``<u, B^dagger v> := <B u, v>``.
    """
    left = 0.5 * (gram.left(op, u, v) + gram.right(op, u, v))
    # <B^dagger u, v> = conj(<v, B^dagger u>) = conj(<B v, u>) = <u, B v>
    right = 0.5 * (gram.right(op, u, v) + gram.left(op, u, v))
    return left, right


def operator_defects(
    spec: SurfaceSpec,
    operators: list,
    phi: ComplexExpr,
    psi: ComplexExpr,
    params: OperatorParams = OperatorParams(),
    resolution: int = 96,
) -> HermiticityReport:
    """Hermiticity defects of qop operators under the surface measure."""
    gram = _Gram(spec, phi, psi, resolution, params)
    table = qop_operators(spec.sdf)
    report = HermiticityReport(spec.describe(), resolution, params, str(phi), str(psi), "geometric")
    for name in operators:
        if name not in table:
            raise AuditError(f"unknown or unsupported operator {name!r} for this surface")
        report.entries[name] = _raw_entry(gram, table[name])
    return report


def ordering_defects(
    spec: SurfaceSpec,
    phi: ComplexExpr | None = None,
    psi: ComplexExpr | None = None,
    candidates=("weinberg_raw", "oo1", "oo2", "oo3"),
    params: OperatorParams = OperatorParams(),
    resolution: int = 48,
    momentum: str = "geometric",
) -> HermiticityReport:
    """Hermiticity of Weinberg's force operator and its symmetrized orderings.

    ``weinberg_raw`` is the literal unsymmetrized form; ``oo1..oo3`` are
    ``(B + B^dagger)/2`` for three orderings ``B`` that share one classical
    limit.  Pairwise entries are ``<phi, (A - B) psi>``.
    """
    if resolution < 32:
        raise AuditError("ordering lab needs resolution >= 32")
    if momentum not in ("geometric", "bare"):
        raise AuditError("momentum must be 'geometric' or 'bare'")
    notes = []
    if phi is None or psi is None:
        phi, psi = ComplexExpr.real(Const(1.0)), ComplexExpr.real(Var(0))
        notes.append("default trial pair phi = 1, psi = x")
    gram = _Gram(spec, phi, psi, resolution, params)
    report = HermiticityReport(spec.describe(), resolution, params, str(phi), str(psi), momentum, notes=notes)
    ops = {
        name: OperatorSpec(
            ORDERING_BASES[name].__name__,
            lambda p, f, prm, base=ORDERING_BASES[name]: base(p, f, prm, momentum),
            2,
            4,
        )
        for name in candidates
    }
    sym_left = {}
    for name in candidates:
        op = ops[name]
        if name == "weinberg_raw":
            report.entries[name] = _raw_entry(gram, op)
            continue
        l1, r1 = _sym_products(gram, op, "phi", "psi")
        l2, r2 = _sym_products(gram, op, "psi", "phi")
        report.entries[name] = HermiticityEntry(name, l1 - r1, l2 - r2, symmetrized=True)
        sym_left[name] = l1
    for a, b in itertools.combinations(sorted(sym_left), 2):
        report.pairwise[f"{a}-{b}"] = sym_left[a] - sym_left[b]
    return report

