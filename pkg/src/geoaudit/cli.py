"""Command-line front end.

Every option can also come from an INI-style config file (``--config``);
keys are the long option names with dashes replaced by underscores, section
names are free-form.  Flags given on the command line win.

Exit codes: 0 success (a breakdown verdict is a finding, not a failure),
1 the run is internally inconsistent or a drift bound was exceeded,
2 bad input.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import json
import math
import sys
from datetime import datetime, timezone

import numpy as np

from . import classical, expr as ex
from .audit import (
    MISMATCH_TOL,
    VERDICT_TOL,
    AuditError,
    ehrenfest_audit,
    operator_defects,
    ordering_defects,
    qop_operators,
)
from .geometry import GeometryError, OperatorParams, geometry_at, principal_curvatures
from .qop import WaveField
from .surfaces import BUILTIN_NAMES, Chart, SurfaceError, builtin_surface, custom_surface, sample_points, validate_surface

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2

DEFAULT_PSI = ("exp(x)*(1+0.3*z)", "sin(x+2*y)", "x^2-z+2")
DRIFT_BOUNDS = {"energy_drift": 1e-9, "constraint_drift": 1e-8, "tangency_drift": 1e-9}
AUTO_PROJECT_TOL = 1e-3

def number(text) -> float:
    """A float, or a constant expression such as ``2*pi``."""
    try:
        return float(text)
    except ValueError:
        pass
    try:
        return float(ex.evaluate(ex.parse_expr(str(text), 1), np.zeros(1)))
    except ex.ExprError as err:
        raise ValueError(f"not a number: {text!r} ({err})") from None


# option name -> (type, default); None default means "not set"
OPTIONS = {
    "surface": (str, "sphere"),
    "dim": (int, None),
    "r": (number, None),
    "a": (number, None),
    "b": (number, None),
    "c": (number, None),
    "R0": (number, None),
    "height": (number, None),
    "half_width": (number, None),
    "levelset": (str, None),
    "sdf": (bool, False),
    "chart_map": (str, None),
    "chart_domain": (str, None),
    "chart_periodic": (str, None),
    "chart_area": (str, None),
    "xi": (number, 0.0),
    "eta": (number, 0.0),
    "hbar": (number, 1.0),
    "mu": (number, 1.0),
    "seed": (int, 7),
    "samples": (int, None),
    "resolution": (int, None),
    "tol": (number, VERDICT_TOL),
    "mismatch_tol": (number, MISMATCH_TOL),
    "psi": (list, None),
    "phi": (str, None),
    "operators": (str, None),
    "momentum": (str, "geometric"),
    "force_form": (str, "projector"),
    "x0": (str, None),
    "p0": (str, None),
    "T": (number, 10.0),
    "h": (number, 1e-3),
    "out": (str, None),
    "csv": (str, None),
}
SURFACE_KEYS = ("r", "a", "b", "c", "R0", "height", "half_width")


class ConfigError(ValueError):
    pass


# ----------------------------------------------------------------- parsing


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI file with defaults for any option")
    for name, (kind, _) in OPTIONS.items():
        flag = "--" + name.replace("_", "-")
        kw = {"dest": name, "default": argparse.SUPPRESS}
        if kind is bool:
            common.add_argument(flag, action="store_true", **kw)
        elif kind is list:
            common.add_argument(flag, action="append", metavar="RE[;IM]", **kw)
        else:
            common.add_argument(flag, type=kind, **kw)

    parser = argparse.ArgumentParser(prog="geoaudit", description="Geometric quantum-mechanics audits on embedded surfaces.")
    sub = parser.add_subparsers(dest="command", required=True)
    surf = sub.add_parser("surface", help="surface utilities")
    surf_sub = surf.add_subparsers(dest="action", required=True)
    surf_sub.add_parser("validate", parents=[common], help="check the surface definition")
    surf_sub.add_parser("inspect", parents=[common], help="report geometry at sample points")
    sub.add_parser("ehrenfest", parents=[common], help="two-route Ehrenfest residual audit")
    sub.add_parser("hermiticity", parents=[common], help="hermiticity defects of the surface operators")
    sub.add_parser("orderings", parents=[common], help="hermiticity of force-operator orderings")
    sub.add_parser("classical", parents=[common], help="constrained classical trajectory")
    return parser


def _coerce(name: str, raw):
    kind = OPTIONS[name][0]
    if kind is bool:
        if isinstance(raw, bool):
            return raw
        v = str(raw).strip().lower()
        if v in ("1", "true", "yes", "on"):
            return True
        if v in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{name}: expected a boolean, got {raw!r}")
    if kind is list:
        if isinstance(raw, list):
            return raw
        return [line.strip() for line in str(raw).splitlines() if line.strip()]
    try:
        return kind(raw)
    except ValueError:
        raise ConfigError(f"{name}: cannot read {raw!r}") from None


def _read_config(path: str) -> dict:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str  # keep R0 and T as written
    try:
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh)
    except (OSError, configparser.Error) as err:
        raise ConfigError(f"cannot read config {path}: {err}") from None
    out = {}
    for section in cp.sections():
        for key, value in cp.items(section):
            key = key.replace("-", "_")
            if key not in OPTIONS:
                raise ConfigError(f"unknown config key {key!r} in [{section}]")
            out[key] = _coerce(key, value)
    return out


def resolve_config(args: argparse.Namespace) -> dict:
    """Defaults, then the config file, then command-line flags."""
    cfg = {k: d for k, (_, d) in OPTIONS.items()}
    given = vars(args)
    if given.get("config"):
        cfg.update(_read_config(given["config"]))
    for k in OPTIONS:
        if k in given:
            cfg[k] = _coerce(k, given[k])
    cfg["command"] = args.command if args.command != "surface" else f"surface {args.action}"
    for k in ("tol", "mismatch_tol", "hbar", "mu", "h", "T"):
        if not cfg[k] > 0:
            raise ConfigError(f"{k} must be positive")
    for k in ("samples", "resolution"):
        if cfg[k] is not None and cfg[k] < 1:
            raise ConfigError(f"{k} must be >= 1")
    return cfg


def _numbers(text: str, what: str) -> list:
    try:
        return [number(tok) for tok in text.replace(",", " ").split()]
    except ValueError as err:
        raise ConfigError(f"{what}: {err}") from None


def _custom_chart(cfg: dict, dim: int) -> Chart:
    missing = [k for k in ("chart_map", "chart_domain") if not cfg.get(k)]
    if missing:
        raise ConfigError(f"custom levelset needs {', '.join(missing)}")
    pdim = dim - 1
    comps = [ex.parse_expr(s.strip(), pdim) for s in cfg["chart_map"].split(";")]
    if len(comps) != dim:
        raise ConfigError(f"chart_map needs {dim} components separated by ';'")
    bounds = [_numbers(part, "chart_domain") for part in cfg["chart_domain"].split(";")]
    if len(bounds) != pdim or any(len(b) != 2 for b in bounds):
        raise ConfigError(f"chart_domain needs {pdim} 'lo hi' pairs separated by ';'")
    if cfg.get("chart_periodic"):
        periodic = [_coerce("sdf", p) for p in cfg["chart_periodic"].split(";")]
        if len(periodic) != pdim:
            raise ConfigError(f"chart_periodic needs {pdim} entries")
    else:
        periodic = [False] * pdim
    area = ex.parse_expr(cfg["chart_area"], pdim) if cfg.get("chart_area") else ex.Const(1.0)
    return Chart(
        tuple(comps),
        tuple(b[0] for b in bounds),
        tuple(b[1] for b in bounds),
        tuple(periodic),
        area,
    )


def build_surface(cfg: dict):
    if cfg.get("levelset"):
        dim = cfg["dim"] or 3
        chart = _custom_chart(cfg, dim)
        return custom_surface(cfg["levelset"], dim, [chart], sdf=cfg["sdf"])
    name = cfg["surface"]
    if name not in BUILTIN_NAMES:
        raise ConfigError(f"unknown surface {name!r}; choose from {', '.join(BUILTIN_NAMES)}")
    params = {k: cfg[k] for k in SURFACE_KEYS if cfg[k] is not None}
    return builtin_surface(name, params, cfg["dim"])


def _params(cfg: dict) -> OperatorParams:
    return OperatorParams(cfg["xi"], cfg["eta"], cfg["hbar"], cfg["mu"])


def _wave(text: str, dim: int) -> ex.ComplexExpr:
    parts = text.split(";")
    if len(parts) > 2:
        raise ConfigError(f"wavefunction {text!r}: use 'RE' or 'RE;IM'")
    re_ = ex.parse_expr(parts[0].strip(), dim)
    im_ = ex.parse_expr(parts[1].strip(), dim) if len(parts) == 2 else ex.Const(0.0)
    return ex.ComplexExpr(re_, im_)


def _vector(text: str, dim: int, what: str) -> np.ndarray:
    v = _numbers(text, what)
    if len(v) != dim:
        raise ConfigError(f"{what} needs {dim} components, got {len(v)}")
    return np.array(v)


# ------------------------------------------------------------------ output


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, complex):
        return {"re": _plain(obj.real), "im": _plain(obj.imag)}
    return obj


def _emit(cfg: dict, report: dict, exit_code: int) -> None:
    doc = {
        "command": cfg["command"],
        "config": {k: v for k, v in cfg.items() if k != "command"},
        "seed": cfg["seed"],
        "exit_code": exit_code,
        "report": report,
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }
    text = json.dumps(_plain(doc), indent=2, sort_keys=True) + "\n"
    if cfg["out"]:
        with open(cfg["out"], "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _warn(msg: str) -> None:
    print(f"geoaudit: warning: {msg}", file=sys.stderr)


# ---------------------------------------------------------------- commands


def cmd_surface_validate(cfg: dict) -> int:
    spec = build_surface(cfg)
    rep = validate_surface(spec, cfg["samples"] or 200, cfg["seed"])
    code = EXIT_OK if rep.passed else EXIT_FAIL
    _emit(cfg, rep.to_dict(), code)
    return code


def cmd_surface_inspect(cfg: dict) -> int:
    spec = build_surface(cfg)
    pts = sample_points(spec, cfg["samples"] or 5, cfg["seed"])
    rows = []
    for x in pts:
        geo = geometry_at(spec, x, 2)
        vals = geo.values()
        rows.append(
            {
                "point": x,
                "normal": vals["n"],
                "mean_curvature_trace": vals["M"],
                "curvature_square_sum": vals["K"],
                "principal_curvatures": principal_curvatures(geo),
            }
        )
    _emit(cfg, {"surface": spec.describe(), "points": rows}, EXIT_OK)
    return EXIT_OK


def cmd_ehrenfest(cfg: dict) -> int:
    spec = build_surface(cfg)
    if not spec.sdf:
        raise ConfigError("ehrenfest audit requires a signed-distance surface")
    texts = cfg["psi"] or list(DEFAULT_PSI)
    if cfg["psi"] is None and spec.dim == 2:
        texts = [t.replace("z", "y") for t in texts]  # presets are written in x, y, z
    cfg["psi"] = texts
    waves = [WaveField(_wave(t, spec.dim), t) for t in texts]
    pts = sample_points(spec, cfg["samples"] or 50, cfg["seed"])
    rep = ehrenfest_audit(spec, _params(cfg), waves, pts, cfg["tol"], cfg["mismatch_tol"])
    code = EXIT_OK if rep.consistent else EXIT_FAIL
    if cfg["csv"]:
        with open(cfg["csv"], "w", newline="", encoding="utf-8") as fh:
            csv.writer(fh).writerows(rep.csv_rows())
    _emit(cfg, rep.to_dict(), code)
    return code


def _trial_pair(cfg: dict, dim: int):
    if cfg["phi"] is None and not cfg["psi"]:
        return None, None
    if cfg["phi"] is None or not cfg["psi"]:
        raise ConfigError("give both --phi and --psi, or neither")
    if len(cfg["psi"]) != 1:
        raise ConfigError("exactly one --psi is used by this command")
    return _wave(cfg["phi"], dim), _wave(cfg["psi"][0], dim)


def cmd_hermiticity(cfg: dict) -> int:
    spec = build_surface(cfg)
    phi, psi = _trial_pair(cfg, spec.dim)
    notes = []
    if phi is None:
        phi, psi = ex.ComplexExpr.real(ex.Const(1.0)), ex.ComplexExpr.real(ex.Var(0))
        notes.append("default trial pair phi = 1, psi = x")
    available = list(qop_operators(spec.sdf))
    ops = [o.strip() for o in cfg["operators"].split(",")] if cfg["operators"] else available
    rep = operator_defects(spec, ops, phi, psi, _params(cfg), cfg["resolution"] or 96)
    rep.notes.extend(notes)
    _emit(cfg, rep.to_dict(), EXIT_OK)
    return EXIT_OK


def cmd_orderings(cfg: dict) -> int:
    spec = build_surface(cfg)
    phi, psi = _trial_pair(cfg, spec.dim)
    rep = ordering_defects(
        spec, phi, psi, params=_params(cfg), resolution=cfg["resolution"] or 48, momentum=cfg["momentum"]
    )
    _emit(cfg, rep.to_dict(), EXIT_OK)
    return EXIT_OK


def cmd_classical(cfg: dict) -> int:
    spec = build_surface(cfg)
    N = spec.dim
    if cfg["x0"]:
        x0 = _vector(cfg["x0"], N, "x0")
    else:
        x0 = sample_points(spec, 1, cfg["seed"])[0]
    fx = float(spec.f(x0))
    if abs(fx) > classical.CONSTRAINT_TOL:
        raise ConfigError(f"x0 is off the surface (|f| = {abs(fx):.3e})")
    n = classical.unit_normal(spec, x0)
    if cfg["p0"]:
        p0 = _vector(cfg["p0"], N, "p0")
    else:
        p0 = np.random.default_rng(cfg["seed"]).normal(size=N)
        p0 -= n * (n @ p0)
        p0 /= np.linalg.norm(p0)
    normal_part = float(n @ p0)
    if abs(normal_part) > AUTO_PROJECT_TOL:
        raise ConfigError(f"p0 is not tangential (n.p0 = {normal_part:.3e} > {AUTO_PROJECT_TOL})")
    if abs(normal_part) > classical.CONSTRAINT_TOL * max(1.0, float(np.linalg.norm(p0))):
        _warn(f"projecting p0 onto the tangent plane (n.p0 = {normal_part:.3e})")
        p0 = p0 - n * normal_part
    cfg["x0"] = " ".join(repr(float(v)) for v in x0)
    cfg["p0"] = " ".join(repr(float(v)) for v in p0)
    if cfg["force_form"] not in classical.FORCE_FORMS:
        raise ConfigError(f"force_form must be one of {classical.FORCE_FORMS}")
    traj = classical.run_trajectory(spec, x0, p0, cfg["T"], cfg["h"], cfg["force_form"], cfg["mu"])
    summary = traj.summary
    summary["return_distance"] = float(np.linalg.norm(traj.states[-1].x - x0))
    summary["bounds"] = dict(DRIFT_BOUNDS)
    exceeded = [k for k, b in DRIFT_BOUNDS.items() if summary[k] > b]
    summary["exceeded"] = exceeded
    if cfg["csv"]:
        traj.write_csv(cfg["csv"])
    code = EXIT_FAIL if exceeded else EXIT_OK
    _emit(cfg, {"surface": spec.describe(), "summary": summary}, code)
    return code


COMMANDS = {
    "surface validate": cmd_surface_validate,
    "surface inspect": cmd_surface_inspect,
    "ehrenfest": cmd_ehrenfest,
    "hermiticity": cmd_hermiticity,
    "orderings": cmd_orderings,
    "classical": cmd_classical,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        return COMMANDS[cfg["command"]](cfg)
    except (ConfigError, SurfaceError, GeometryError, ex.ExprError, AuditError) as err:
        print(f"geoaudit: error: {err}", file=sys.stderr)
        return EXIT_INPUT
    except classical.ProjectionError as err:
        print(f"geoaudit: error: {err}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
