import json
import math

import numpy as np
import pytest

from geoaudit import expr as ex
from geoaudit.audit import (
    AuditError,
    NoFixReport,
    WaveField,
    complex_json,
    ehrenfest_audit,
    no_fix_check,
    operator_defects,
    ordering_defects,
)
from geoaudit.geometry import GeometryError, OperatorParams, geometry_at
from geoaudit.surfaces import builtin_surface, sample_points

X, Y, Z = ex.variables(3)
CONFINING = OperatorParams(2.0, 1.0)
WAVES = [
    WaveField.real(ex.exp(X) * (1 + 0.3 * Z), "a"),
    WaveField.real(ex.sin(X + 2 * Y), "b"),
    WaveField.real(X**2 - Z + 2, "c"),
]


def real(e):
    return ex.ComplexExpr.real(ex.as_expr(e))


def audit(name, params, count=20, seed=7, **kw):
    s = builtin_surface(name, kw)
    return ehrenfest_audit(s, params, WAVES, sample_points(s, count, seed))


def test_sphere_holds():
    rep = audit("sphere", CONFINING)
    assert rep.consistent
    assert rep.max_abs_F <= 1e-9
    assert rep.verdict == "ehrenfest_holds"


def test_plane_holds_for_any_family():
    for params in (OperatorParams(), OperatorParams(0.4, 3.0)):
        assert audit("plane", params, count=5).verdict == "ehrenfest_holds"


def test_cylinder_breakdown():
    rep = audit("cylinder", CONFINING, a=1.0)
    assert rep.consistent
    assert rep.verdict == "breakdown"
    for s in rep.samples:
        assert np.linalg.norm(s.F_analytic) == pytest.approx(0.25, abs=1e-9)


@pytest.mark.parametrize("preset", [(0.0, 0.0), (0.0, 1.0), (2.0, 1.0)])
def test_torus_breakdown_every_preset(preset):
    rep = audit("torus", OperatorParams(*preset), count=15)
    assert rep.max_mismatch <= 1e-8
    assert rep.max_abs_F > 1e-3
    assert rep.verdict == "breakdown"
    assert all(s.mismatch >= 0 and s.spread >= 0 for s in rep.samples)


def test_report_serialization():
    rep = audit("cylinder", CONFINING, count=4)
    d = json.loads(json.dumps(rep.to_dict()))
    assert d["summary"]["verdict"] == "breakdown"
    assert set(d["samples"][0]["R_operational"][0][0]) == {"re", "im"}
    rows = list(rep.csv_rows())
    assert rows[0] == ["index", "x1", "x2", "x3", "abs_F", "mismatch"]
    assert len(rows) == 5
    assert complex_json(1 + 2j) == {"re": 1.0, "im": 2.0}


def test_small_wavefunction_points_are_skipped():
    s = builtin_surface("sphere", {"r": 1.0}, 3)
    pts = np.array([[1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
    waves = [WaveField.real(Z), WaveField.real(X + 3.0)]
    rep = ehrenfest_audit(s, CONFINING, waves, pts)
    assert rep.samples[0].R_operational[0] is None
    assert rep.samples[0].R_operational[1] is not None
    with pytest.raises(AuditError, match="every wavefield"):
        ehrenfest_audit(s, CONFINING, [WaveField.real(Z), WaveField.real(2 * Z)], pts)


def test_audit_preconditions():
    s = builtin_surface("sphere")
    with pytest.raises(AuditError):
        ehrenfest_audit(s, CONFINING, WAVES[:1], sample_points(s, 3))
    ell = builtin_surface("ellipsoid")
    with pytest.raises(GeometryError):
        ehrenfest_audit(ell, CONFINING, WAVES, sample_points(ell, 3))


def test_inconsistency_is_reported():
    rep = audit("torus", CONFINING, count=3)
    rep.mismatch_tol = 1e-18
    assert not rep.consistent


# ------------------------------------------------------------ no-fix


def test_no_fix_zero_potential():
    s = builtin_surface("torus")
    rep = no_fix_check(s, CONFINING, ex.Const(0.0), WAVES, sample_points(s, 8, seed=1))
    assert rep.max_shift_error <= 1e-12 and rep.max_normal_shift <= 1e-12
    assert rep.passed


@pytest.mark.parametrize("W", [X, 0.3 / ex.sqrt(X**2 + Y**2) + Z**2, ex.sin(X * Y)])
def test_no_fix_torus(W):
    s = builtin_surface("torus")
    rep = no_fix_check(s, CONFINING, W, WAVES, sample_points(s, 10, seed=2))
    assert rep.passed, rep.to_dict()


def test_no_fix_shift_for_linear_potential():
    # direct formula for W = x: the shift is -(e_x - n n_x)
    from geoaudit.qop import residual_operational

    s = builtin_surface("torus")
    pts = sample_points(s, 5, seed=3)
    n = geometry_at(s, pts, 2).values()["n"]
    R0 = residual_operational(s, WAVES[1], pts, CONFINING)
    R1 = residual_operational(s, WAVES[1], pts, CONFINING, potential=X)
    expected = -(np.array([1.0, 0.0, 0.0])[:, None] - n * n[0])
    assert np.allclose(R1 - R0, expected, atol=1e-9)


def test_no_fix_requires_confining_family():
    s = builtin_surface("torus")
    with pytest.raises(AuditError):
        no_fix_check(s, OperatorParams(), X, WAVES, sample_points(s, 2))
    assert not NoFixReport(1.0, 0.0, 0.0).passed


# ------------------------------------------------------------ hermiticity

TORUS = builtin_surface("torus", {"R0": 2.0, "a": 0.5})
SPHERE = builtin_surface("sphere", {"r": 1.0}, 3)
PHI = ex.ComplexExpr(ex.exp(0.3 * X) * Y, ex.cos(Z))
PSI = ex.ComplexExpr(X * Z + 1.0, ex.sin(Y))


@pytest.mark.parametrize("spec", [SPHERE, TORUS], ids=["sphere", "torus"])
def test_geometric_operators_hermitian(spec):
    rep = operator_defects(spec, ["p", "S", "H", "laplace_beltrami"], PHI, PSI, OperatorParams(2.0, 1.0), 48)
    for name, entry in rep.entries.items():
        assert entry.max_defect <= 1e-8, name


def test_dropping_mean_curvature_breaks_hermiticity():
    rep = operator_defects(TORUS, ["p_no_mean_curvature"], real(X), real(1.0), resolution=48)
    assert rep.entries["p_no_mean_curvature"].max_defect >= 1e-3
    # hand value on the unit sphere: -i int (1 - n_x^2) dA = -i 8 pi / 3
    rep = operator_defects(SPHERE, ["p_no_mean_curvature"], real(X), real(1.0), resolution=48)
    assert rep.entries["p_no_mean_curvature"].defect[0] == pytest.approx(-8j * math.pi / 3, abs=1e-10)


def test_unknown_operator():
    with pytest.raises(AuditError):
        operator_defects(SPHERE, ["teleport"], PHI, PSI, resolution=8)
    ell = builtin_surface("ellipsoid")
    with pytest.raises(AuditError):
        operator_defects(ell, ["S"], PHI, PSI, resolution=8)


def test_defect_antisymmetry():
    rep = operator_defects(TORUS, ["p_no_mean_curvature", "p"], PHI, PSI, resolution=32)
    for entry in rep.entries.values():
        assert np.allclose(entry.defect, -np.conj(entry.defect_swapped), atol=1e-10)
    lab = ordering_defects(builtin_surface("ellipsoid"), PHI, PSI, resolution=32)
    for entry in lab.entries.values():
        assert np.allclose(entry.defect, -np.conj(entry.defect_swapped), atol=1e-10)


def test_ordering_lab_on_ellipsoid():
    rep = ordering_defects(builtin_surface("ellipsoid", {"a": 1.0, "b": 1.5, "c": 2.0}), resolution=32)
    assert rep.notes == ["default trial pair phi = 1, psi = x"]
    assert rep.entries["weinberg_raw"].max_defect >= 1e-3
    for name in ("oo1", "oo2", "oo3"):
        assert rep.entries[name].symmetrized
        assert rep.entries[name].max_defect <= 1e-8
    assert max(float(np.max(np.abs(v))) for v in rep.pairwise.values()) >= 1e-4
    assert set(rep.pairwise) == {"oo1-oo2", "oo1-oo3", "oo2-oo3"}
    json.dumps(rep.to_dict())


def test_weinberg_raw_on_unit_sphere():
    # With |grad f| = 1 the literal form reduces to -n_k (-LB + 2) on the unit
    # sphere; for phi = 1, psi = x its x-defect is -2 int n_x x dA = -8 pi / 3.
    rep = ordering_defects(SPHERE, resolution=32)
    d = rep.entries["weinberg_raw"].defect
    assert d[0] == pytest.approx(-8 * math.pi / 3, abs=1e-9)
    assert abs(d[1]) <= 1e-9 and abs(d[2]) <= 1e-9
    # the symmetrized orderings coincide when |grad f| = 1
    for v in rep.pairwise.values():
        assert np.max(np.abs(v)) <= 1e-9


def test_ordering_lab_options():
    ell = builtin_surface("ellipsoid")
    rep = ordering_defects(ell, candidates=("oo1", "oo2"), resolution=32, momentum="bare")
    assert rep.momentum == "bare"
    assert rep.entries["oo1"].max_defect <= 1e-8
    with pytest.raises(AuditError):
        ordering_defects(ell, resolution=16)
    with pytest.raises(AuditError):
        ordering_defects(ell, resolution=32, momentum="canonical")
