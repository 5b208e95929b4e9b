"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

The lines are collected in ``RESULTS`` and repeated in the terminal summary
(see ``conftest.py``), so they show up even when output is captured.
"""
import math

import numpy as np
import pytest

from geoaudit import classical as cl, expr as ex, jet
from geoaudit._tables import multi_indices
from geoaudit.audit import WaveField, ehrenfest_audit, no_fix_check, operator_defects, ordering_defects
from geoaudit.geometry import OperatorParams, geometry_at
from geoaudit.qop import extend_off_surface, residual_operational
from geoaudit.surfaces import BUILTIN_NAMES, builtin_surface, sample_points

from conftest import mp_partial, random_expr

RESULTS = []
X, Y, Z = ex.variables(3)
FAMILIES = {"(0,0)": OperatorParams(0.0, 0.0), "(0,1)": OperatorParams(0.0, 1.0), "(2,1)": OperatorParams(2.0, 1.0)}
CONFINING = FAMILIES["(2,1)"]
WAVES = [
    WaveField.real(ex.exp(X) * (1 + 0.3 * Z), "exp(x)(1+0.3z)"),
    WaveField.real(ex.sin(X + 2 * Y), "sin(x+2y)"),
    WaveField.real(X**2 - Z + 2, "x^2-z+2"),
    WaveField(ex.ComplexExpr(ex.cos(X + Y), ex.sin(X + Y)), "exp(i(x+y))"),
]
POINTS = 50
SEED = 7


def report(number, title, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} [{number}] {title}: {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


def points(spec, count=POINTS, seed=SEED):
    return sample_points(spec, count, seed)


def test_1_two_route_agreement():
    worst = 0.0
    for name, kw in [("sphere", {"dim": 3}), ("cylinder", {}), ("torus", {})]:
        spec = builtin_surface(name, None, kw.get("dim"))
        for params in FAMILIES.values():
            rep = ehrenfest_audit(spec, params, WAVES[:3], points(spec))
            worst = max(worst, rep.max_mismatch)
    report(1, "two-route residual agreement (3 surfaces x 3 families x 50 pts x 3 psi)", worst <= 1e-8,
           f"max relative mismatch {worst:.2e} <= 1e-8")


def test_2_sphere_exception():
    s3 = builtin_surface("sphere", {"r": 1.0}, 3)
    s4 = builtin_surface("sphere", {"r": 1.0}, 4)
    F3 = ehrenfest_audit(s3, CONFINING, WAVES[:3], points(s3)).max_abs_F
    waves4 = [WaveField.real(ex.exp(X) * (1 + 0.3 * Z)), WaveField.real(ex.sin(X + 2 * ex.Var(3)) + 2)]
    rep4 = ehrenfest_audit(s4, CONFINING, waves4, points(s4))
    ok = F3 <= 1e-9 and rep4.max_abs_F > 1e-3 and rep4.consistent
    report(2, "sphere exception", ok,
           f"N=3 max|F| {F3:.2e} <= 1e-9; N=4 max|F| {rep4.max_abs_F:.6f} > 1e-3 (hand value 0.75)")


def test_3_breakdown_witness():
    cyl = builtin_surface("cylinder", {"a": 1.0})
    rep = ehrenfest_audit(cyl, CONFINING, WAVES[:3], points(cyl))
    dev = max(abs(np.linalg.norm(s.F_analytic) - 0.25) for s in rep.samples)
    torus = builtin_surface("torus", {"R0": 2.0, "a": 0.5})
    tF = {k: ehrenfest_audit(torus, p, WAVES[:3], points(torus)).max_abs_F for k, p in FAMILIES.items()}
    ok = dev <= 1e-9 and rep.consistent and all(v > 1e-3 for v in tF.values())
    detail = f"cylinder ||F| - 0.25| max {dev:.2e}; torus max|F| " + ", ".join(f"{k}={v:.3f}" for k, v in tF.items())
    report(3, "breakdown witness", ok, detail)


def test_4_multiplicativity_and_extension_independence():
    spread = ext = 0.0
    chi = ex.sin(X * Y) + Z**2
    for name in ("cylinder", "torus"):
        spec = builtin_surface(name)
        pts = points(spec)
        for params in FAMILIES.values():
            rep = ehrenfest_audit(spec, params, WAVES, pts)
            spread = max(spread, rep.max_spread)
            for w in WAVES:
                a = residual_operational(spec, w, pts, params)
                b = residual_operational(spec, extend_off_surface(w.psi, spec, chi), pts, params)
                ext = max(ext, float(np.max(np.abs(a - b))))
    report(4, "multiplicativity and extension independence", spread <= 1e-8 and ext <= 1e-8,
           f"spread across 4 psi {spread:.2e}; extension change {ext:.2e} (both <= 1e-8)")


def test_5_no_fix_theorem():
    torus = builtin_surface("torus")
    reps = [
        no_fix_check(torus, CONFINING, W, WAVES[:3], points(torus))
        for W in (X, 0.3 / ex.sqrt(X**2 + Y**2) + Z**2, ex.exp(0.2 * Y) * ex.cos(Z))
    ]
    shift = max(r.max_shift_error for r in reps)
    normal = max(r.max_normal_shift for r in reps)
    tang = max(r.max_tangential_residual for r in reps)
    report(5, "no-fix theorem", shift <= 1e-8 and normal <= 1e-10 and tang <= 1e-9,
           f"shift error {shift:.2e} <= 1e-8, n.Delta {normal:.2e} <= 1e-10, tangential residual {tang:.2e} <= 1e-9")


def test_6_hermiticity():
    phi = ex.ComplexExpr(ex.exp(0.3 * X) * Y, ex.cos(Z))
    psi = ex.ComplexExpr(X * Z + 1.0, ex.sin(Y))
    worst = 0.0
    for spec in (builtin_surface("sphere", {"r": 1.0}, 3), builtin_surface("torus")):
        for params in FAMILIES.values():
            rep = operator_defects(spec, ["p", "S", "H"], phi, psi, params, resolution=96)
            worst = max(worst, max(e.max_defect for e in rep.entries.values()))
    bare = operator_defects(
        builtin_surface("torus"), ["p_no_mean_curvature"], ex.ComplexExpr.real(X), ex.ComplexExpr.real(ex.Const(1.0)),
        resolution=96,
    ).entries["p_no_mean_curvature"].max_defect
    report(6, "hermiticity at resolution 96", worst <= 1e-8 and bare >= 1e-3,
           f"max defect of p, S, H {worst:.2e} <= 1e-8; p without M n/2 on torus {bare:.3f} >= 1e-3")


def test_7_ordering_lab():
    rep = ordering_defects(builtin_surface("ellipsoid", {"a": 1.0, "b": 1.5, "c": 2.0}))
    raw = rep.entries["weinberg_raw"].max_defect
    sym = max(rep.entries[k].max_defect for k in ("oo1", "oo2", "oo3"))
    pair = max(float(np.max(np.abs(v))) for v in rep.pairwise.values())
    report(7, "ordering lab on ellipsoid (1, 1.5, 2)", raw >= 1e-3 and sym <= 1e-8 and pair >= 1e-4,
           f"weinberg_raw {raw:.3f} >= 1e-3; oo1-oo3 max {sym:.2e} <= 1e-8; max pairwise {pair:.3f} >= 1e-4")


def _tangential_start(spec, seed):
    x = sample_points(spec, 1, seed)[0]
    n = cl.unit_normal(spec, x)
    p = np.random.default_rng(seed).normal(size=spec.dim)
    p -= n * (n @ p)
    return x, p / np.linalg.norm(p)


def test_8_classical_suite():
    circle = builtin_surface("circle", {"r": 1.0})
    traj = cl.run_trajectory(circle, [1.0, 0.0], [0.0, 1.0], 2 * math.pi, 1e-3)
    ret = float(np.linalg.norm(traj.states[-1].x - [1.0, 0.0]))
    drift = {"energy_drift": 0.0, "constraint_drift": 0.0, "tangency_drift": 0.0}
    for name in BUILTIN_NAMES:
        spec = builtin_surface(name)
        x0, p0 = _tangential_start(spec, 21)
        summary = cl.run_trajectory(spec, x0, p0, 10.0, 1e-3).summary
        for k in drift:
            drift[k] = max(drift[k], summary[k])
    ell = builtin_surface("ellipsoid", {"a": 1.0, "b": 1.5, "c": 2.0})
    force_gap = curv = 0.0
    for seed in range(20):
        x, p = _tangential_start(ell, seed)
        force_gap = max(force_gap, float(np.max(np.abs(cl.force(ell, x, p, 1.0, "projector") - cl.force(ell, x, p, 1.0, "weinberg")))))
        for spec in (ell, builtin_surface("torus"), circle):
            xs, ps = _tangential_start(spec, seed)
            curv = max(curv, cl.curvature_relation_check(spec, cl.make_state(spec, 0.0, xs, 1.7 * ps, 1.0)))
    ok = (
        ret <= 1e-6
        and drift["energy_drift"] <= 1e-9
        and drift["constraint_drift"] <= 1e-8
        and drift["tangency_drift"] <= 1e-9
        and force_gap <= 1e-10
        and curv <= 1e-10
    )
    report(8, "classical suite", ok,
           f"circle return {ret:.1e}; drifts over T=10 (all catalog surfaces) energy {drift['energy_drift']:.1e}, "
           f"constraint {drift['constraint_drift']:.1e}, tangency {drift['tangency_drift']:.1e}; "
           f"projector vs weinberg force {force_gap:.1e}; curvature relation {curv:.1e}")


def test_9_jet_engine():
    rng = np.random.default_rng(99)
    fd_worst = 0.0
    for _ in range(50):
        e = random_expr(rng, 3, 3)
        x = rng.uniform(-0.9, 0.9, 3)
        j = jet.evaluate(e, x, 2)
        for alpha in multi_indices(3, 2)[1:]:
            got, want = jet.partial(j, alpha), mp_partial(e, x, alpha)
            fd_worst = max(fd_worst, abs(got - want) / max(abs(want), 1e-9 / 1e-6))
    leib = comm = 0.0
    for _ in range(50):
        g, h = random_expr(rng, 3, 2), random_expr(rng, 3, 2)
        x = rng.uniform(-1, 1, 3)
        jg, jh = jet.evaluate(g, x, 4), jet.evaluate(h, x, 4)
        leib = max(leib, float(np.max(np.abs(jet.evaluate(g * h, x, 4).c - (jg * jh).c))))
        for axis in range(3):
            lhs = jet.lower(jg * jh, axis)
            rhs = jet.lower(jg, axis) * jh + jg * jet.lower(jh, axis)
            comm = max(comm, float(np.max(np.abs(lhs.c - rhs.c))))
    report(9, "jet engine", fd_worst <= 1e-6 and leib <= 1e-13 and comm <= 1e-13,
           f"finite-difference oracle rel err {fd_worst:.1e} <= 1e-6 (50 expressions); "
           f"Leibniz {leib:.1e}, lower commutation {comm:.1e} <= 1e-13")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-s"]))
