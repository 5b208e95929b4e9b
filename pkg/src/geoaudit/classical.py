"""Classical motion of a free particle constrained to a level-set surface.

Forces (for tangential momentum both forms give the same acceleration):

* ``projector``: ``dp/dt = -n (p . gradN . p) / mu = -2 n S``
* ``weinberg``:  ``dp/dt = -grad f (p . hess f . p) / (mu |grad f|^2)``

Integration is fixed-step RK4 followed by a projection back onto the
constraint manifold: Newton along ``grad f`` for the position, then removal
of the normal momentum component.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from . import jet
from .geometry import classical_S, geometry_from_jet, normal_curvature
from .surfaces import SurfaceSpec

CONSTRAINT_TOL = 1e-9
FORCE_FORMS = ("projector", "weinberg")


class ProjectionError(RuntimeError):
    pass


@dataclass(frozen=True)
class TrajectoryState:
    t: float
    x: np.ndarray
    p: np.ndarray
    E: float
    f: float
    n_dot_p: float

    def velocity(self, mu: float = 1.0) -> np.ndarray:
        return self.p / mu


def _local(spec: SurfaceSpec, x, order: int = 2):
    fj = jet.evaluate(spec.levelset, x, order)
    return fj, fj.grad()


def unit_normal(spec: SurfaceSpec, x) -> np.ndarray:
    _, g = _local(spec, x, 1)
    return g / np.linalg.norm(g)


def force(spec: SurfaceSpec, x, p, mu: float = 1.0, form: str = "projector") -> np.ndarray:
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    fj, g = _local(spec, x, 2)
    if form == "projector":
        geo = geometry_from_jet(fj, spec.sdf)
        n = np.array([c.value for c in geo.n])
        return -2.0 * n * classical_S(geo, p, mu)
    if form == "weinberg":
        hess = fj.hessian()
        return -g * (p @ hess @ p) / (mu * (g @ g))
    raise ValueError(f"unknown force form {form!r}; choose from {FORCE_FORMS}")


def make_state(spec: SurfaceSpec, t: float, x, p, mu: float) -> TrajectoryState:
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    fx, g = _local(spec, x, 1)
    n = g / np.linalg.norm(g)
    return TrajectoryState(t, x, p, float(p @ p) / (2.0 * mu), float(fx.value), float(n @ p))


def project(spec: SurfaceSpec, x, p, max_iter: int = 10, tol: float = 1e-14):
    """Newton steps on ``f`` along ``grad f``, then tangentialize ``p``.

    Returns ``(x, p, f(x), n(x))`` at the corrected point.
    """
    x = np.array(x, dtype=float)
    for _ in range(max_iter + 1):
        fx, g = _local(spec, x, 1)
        fv = fx.value
        if abs(fv) <= tol:
            break
        x = x - fv * g / (g @ g)
    else:
        if abs(fv) > CONSTRAINT_TOL:
            raise ProjectionError(f"projection did not converge in {max_iter} iterations (|f| = {abs(fv):.3e})")
    n = g / np.linalg.norm(g)
    p = np.asarray(p, dtype=float)
    return x, p - n * (n @ p), fv, n


def step(
    state: TrajectoryState, spec: SurfaceSpec, h: float, force_form: str = "projector", mu: float = 1.0
) -> TrajectoryState:
    """One RK4 step of ``(dx/dt = p/mu, dp/dt = force)`` plus projection."""
    if h <= 0:
        raise ValueError("step size must be positive")

    def rhs(x, p):
        return p / mu, force(spec, x, p, mu, force_form)

    x, p = state.x, state.p
    k1x, k1p = rhs(x, p)
    k2x, k2p = rhs(x + 0.5 * h * k1x, p + 0.5 * h * k1p)
    k3x, k3p = rhs(x + 0.5 * h * k2x, p + 0.5 * h * k2p)
    k4x, k4p = rhs(x + h * k3x, p + h * k3p)
    x = x + h / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x)
    p = p + h / 6.0 * (k1p + 2 * k2p + 2 * k3p + k4p)
    x, p, fv, n = project(spec, x, p)
    return TrajectoryState(state.t + h, x, p, float(p @ p) / (2.0 * mu), float(fv), float(n @ p))


@dataclass
class Trajectory:
    states: list
    mu: float
    h: float
    force_form: str

    @property
    def summary(self) -> dict:
        E0 = self.states[0].E
        scale = E0 if E0 > 0 else 1.0
        drift_e = max(abs(s.E - E0) for s in self.states) / scale
        drift_f = max(abs(s.f) for s in self.states)
        tang = max(abs(s.n_dot_p) / max(np.linalg.norm(s.p), 1e-300) for s in self.states)
        return {
            "steps": len(self.states) - 1,
            "h": self.h,
            "T": self.states[-1].t,
            "force_form": self.force_form,
            "mu": self.mu,
            "energy_drift": drift_e,
            "constraint_drift": drift_f,
            "tangency_drift": tang,
        }

    def write_csv(self, path) -> None:
        N = len(self.states[0].x)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t"] + [f"x{i + 1}" for i in range(N)] + [f"p{i + 1}" for i in range(N)] + ["E", "f", "n_dot_p"])
            for s in self.states:
                w.writerow([repr(float(v)) for v in [s.t, *s.x, *s.p, s.E, s.f, s.n_dot_p]])


def run_trajectory(
    spec: SurfaceSpec,
    x0,
    p0,
    T: float,
    h: float,
    force_form: str = "projector",
    mu: float = 1.0,
) -> Trajectory:
    """Fixed-step run to time ``T`` (the step is shrunk so steps divide ``T``)."""
    if force_form not in FORCE_FORMS:
        raise ValueError(f"unknown force form {force_form!r}")
    x0 = np.asarray(x0, dtype=float)
    p0 = np.asarray(p0, dtype=float)
    s0 = make_state(spec, 0.0, x0, p0, mu)
    if abs(s0.f) > CONSTRAINT_TOL:
        raise ValueError(f"x0 is off the surface (|f| = {abs(s0.f):.3e})")
    if abs(s0.n_dot_p) > CONSTRAINT_TOL * max(1.0, np.linalg.norm(p0)):
        raise ValueError(f"p0 is not tangential (n.p = {s0.n_dot_p:.3e})")
    steps = max(1, int(round(T / h)))
    h = T / steps
    states = [s0]
    for _ in range(steps):
        states.append(step(states[-1], spec, h, force_form, mu))
    return Trajectory(states, mu, h, force_form)


def curvature_relation_check(spec: SurfaceSpec, state: TrajectoryState, mu: float = 1.0) -> float:
    """``|(-2 n S) - (-2 n H kappa)|`` with ``kappa`` the normal curvature along ``p``."""
    norm_p = np.linalg.norm(state.p)
    if norm_p == 0:
        raise ValueError("curvature relation needs nonzero momentum")
    fj = jet.evaluate(spec.levelset, state.x, 2)
    geo = geometry_from_jet(fj, spec.sdf)
    n = np.array([c.value for c in geo.n])
    kappa = normal_curvature(geo, state.p / norm_p)
    S = classical_S(geo, state.p, mu)
    H = norm_p**2 / (2.0 * mu)
    return float(np.linalg.norm(-2.0 * n * S + 2.0 * n * H * kappa))
