"""Command-line interface: ``ribbonlim <command> [options]``.

Every command writes its reports into ``--out`` together with the fully
resolved configuration (``run_config.json``).  Options may also come from a
JSON or TOML file given with ``--config``; command-line flags win.

Exit status: 0 success, 1 mathematical infeasibility (inflection point,
edge of regression, failed descent, degenerate curve, blocked gradient),
2 usage errors (bad options, missing files, out-of-domain values).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .curves import (
    circle, curve_length, ellipse, helix, locate_curvature_zeros, random_closed_curve, segment, torsion_modulated,
)
from .energy import (
    dimensional_energy, gamma_gap_prediction, node_table, regularized_sadowsky_energy, sadowsky_energy,
    wunderlich_energy,
)
from .errors import DomainError, RibbonError
from .io import columns_to_rows, read_curve, write_csv, write_curve, write_json, write_kappa1, write_obj
from .lab import ProbeSequence, cubic_schedule, eps_sweep, inflection_test_curve, lsc_probe, minimizer_convergence
from .quadrature import QuadratureScheme
from .solver import ObjectiveConfig, minimize
from .surface import angle_defects, build_mesh, surface_energy

try:  # Python >= 3.11
    import tomllib
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

logger = logging.getLogger("ribbonlim")

EXIT_OK, EXIT_DOMAIN, EXIT_USAGE = 0, 1, 2
DOMAIN_KINDS = {"InflectionPoint", "EdgeOfRegression", "NoDescent", "DegenerateCurve", "GradientBlocked"}


class UsageError(Exception):
    def __init__(self, message: str, key: str | None = None):
        super().__init__(message)
        self.key = key


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# ---------------------------------------------------------------------------
# option table


def _float_list(text):
    if isinstance(text, (list, tuple)):
        return [float(x) for x in text]
    return [float(x) for x in str(text).replace(" ", "").split(",") if x]


def _params(items):
    if isinstance(items, dict):
        return dict(items)
    out = {}
    for item in items or []:
        if "=" not in item:
            raise UsageError(f"--param expects key=value, got {item!r}", "param")
        k, v = item.split("=", 1)
        try:
            out[k] = json.loads(v)
        except json.JSONDecodeError:
            out[k] = v
    return out


@dataclass(frozen=True)
class Option:
    name: str
    kind: type | str
    default: object = None
    help: str = ""
    choices: tuple | None = None
    check: object = None  # callable(value) -> error text or None


def _nonneg(v):
    return None if v >= 0 else "must be >= 0"


def _pos(v):
    return None if v > 0 else "must be > 0"


def _decreasing_positive(v):
    if not v:
        return "must be non-empty"
    if any(x <= 0 for x in v):
        return "entries must be > 0"
    if any(b >= a for a, b in zip(v, v[1:])):
        return "must be strictly decreasing"
    return None


COMMON = [
    Option("out", str, "ribbonlim-out", "output directory"),
    Option("seed", int, 0, "seed for randomized inputs", check=_nonneg),
    Option("quad_panels", int, 16, "Gauss-Legendre panels", check=lambda v: None if v >= 1 else "must be >= 1"),
    Option("quad_order", int, 16, "nodes per panel (4..32)", check=lambda v: None if 4 <= v <= 32 else "must lie in 4..32"),
]
CURVE = Option("curve", str, None, "curve JSON file")
EPS = Option("eps", float, 0.0, "aspect ratio eps", check=_nonneg)
KAPPA_M = Option("kappa_m", float, None, "curvature floor kappa_m", check=_pos)
EPS_GRID = Option("eps_grid", "floats", None, "comma-separated decreasing eps values", check=_decreasing_positive)
SOLVER = [
    Option("energy", str, "sadowsky", "energy to minimize", ("sadowsky", "wunderlich", "regularized")),
    Option("penalty_speed", float, 1e4, check=_nonneg),
    Option("penalty_length", float, 1e6, check=_nonneg),
    Option("barrier_kappa", float, 0.0, check=_nonneg),
    Option("max_iter", int, 500, check=_nonneg),
    Option("tol_grad", float, 1e-4, check=_pos),
    Option("tol_rel_energy", float, 1e-12, check=_pos),
    Option("start_noise", float, 0.0, "random coefficient perturbation of the start (uses seed)", check=_nonneg),
]

COMMANDS: dict[str, list[Option]] = {
    "eval": [CURVE, EPS, KAPPA_M,
             Option("bending_stiffness", float, None, "D for the dimensional energy", check=_pos),
             Option("length", float, None, "physical length ell for the dimensional energy", check=_pos)],
    "surface": [CURVE, Option("eps", float, 0.1, "aspect ratio eps", check=_nonneg),
                Option("n_s", int, 128, "samples along the ribbon", check=lambda v: None if v >= 16 else "must be >= 16"),
                Option("n_v", int, 5, "samples across the ribbon", check=lambda v: None if v >= 3 else "must be >= 3")],
    "minimize": [CURVE, EPS, KAPPA_M, *SOLVER],
    "gamma-sweep": [CURVE, EPS_GRID],
    "minimizer-convergence": [CURVE, EPS_GRID, KAPPA_M, *SOLVER[1:]],
    "lsc-probe": [CURVE, KAPPA_M,
                  Option("perturbation", str, "coefficient_oscillation", choices=("torsion_oscillation", "coefficient_oscillation")),
                  Option("count", int, 8, check=lambda v: None if v >= 4 else "must be >= 4"),
                  Option("f0", int, 4, check=lambda v: None if v >= 1 else "must be >= 1"),
                  Option("df", int, 4, check=lambda v: None if v >= 1 else "must be >= 1"),
                  Option("strength", float, 10.0, check=_nonneg),
                  Option("phase", float, None, "oscillation phase (default: first curvature zero, else 0)")],
    "make-curve": [Option("shape", str, None, choices=("circle", "ellipse", "segment", "helix", "torsion_modulated",
                                                        "random_closed", "single_zero", "mobius_like")),
                   Option("param", "params", None, "shape parameter key=value (repeatable)"),
                   Option("output", str, None, "curve file (default OUT/curve.json)")],
}
REQUIRED = {"curve", "shape"}
DEFAULT_GRIDS = {
    "gamma-sweep": [0.04, 0.03, 0.02, 0.015, 0.01, 0.0075, 0.005],
    "minimizer-convergence": [0.4, 0.2, 0.1, 0.05],
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ribbonlim", description="Narrow-ribbon bending energies and experiments.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for cmd, opts in COMMANDS.items():
        p = sub.add_parser(cmd)
        p.add_argument("--config", default=None, help="JSON or TOML file with option values")
        for opt in COMMON + opts:
            flag = "--" + opt.name.replace("_", "-")
            if opt.kind == "params":
                p.add_argument(flag, action="append", default=None, help=opt.help)
            else:
                conv = _float_list if opt.kind == "floats" else opt.kind
                p.add_argument(flag, dest=opt.name, type=conv, default=None, choices=opt.choices, help=opt.help)
    return parser


@dataclass
class RunConfig:
    command: str
    options: dict = field(default_factory=dict)
    config_file: str | None = None

    def __getattr__(self, name):
        try:
            return self.options[name]
        except KeyError:
            raise AttributeError(name) from None

    def quad(self) -> QuadratureScheme:
        return QuadratureScheme(self.options["quad_panels"], self.options["quad_order"])

    def to_dict(self) -> dict:
        return {"command": self.command, "config_file": self.config_file, **self.options}


def _load_config_file(path: str) -> dict:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"config file not found: {path}", "config")
    text = p.read_text()
    try:
        if p.suffix.lower() == ".toml":
            return tomllib.loads(text)
        return json.loads(text)
    except (ValueError, tomllib.TOMLDecodeError) as exc:
        raise UsageError(f"cannot parse config file {path}: {exc}", "config") from exc


def _coerce(opt: Option, value):
    try:
        if opt.kind == "floats":
            return _float_list(value)
        if opt.kind == "params":
            return _params(value)
        if opt.kind is int and isinstance(value, float) and not value.is_integer():
            raise ValueError
        return opt.kind(value)
    except (TypeError, ValueError):
        raise UsageError(f"invalid value for {opt.name}: {value!r}", opt.name) from None


def parse_config(argv=None) -> RunConfig:
    """Resolve defaults <- config file <- command-line flags and validate ranges."""
    args = build_parser().parse_args(argv)
    opts = {o.name: o for o in COMMON + COMMANDS[args.command]}
    resolved = {name: o.default for name, o in opts.items()}
    if args.command in DEFAULT_GRIDS:
        resolved["eps_grid"] = list(DEFAULT_GRIDS[args.command])
    if args.config:
        data = _load_config_file(args.config)
        if "command" in data and data.pop("command") != args.command:
            raise UsageError("config file command does not match", "command")
        for key, value in data.items():
            name = key.replace("-", "_")
            if name not in opts:
                raise UsageError(f"unknown config key {key!r} for command {args.command}", key)
            resolved[name] = _coerce(opts[name], value)
    for name in opts:
        value = getattr(args, name, None)
        if value is not None:
            resolved[name] = _params(value) if opts[name].kind == "params" else value
    for name, opt in opts.items():
        value = resolved[name]
        if value is None:
            if name in REQUIRED:
                raise UsageError(f"missing required option --{name.replace('_', '-')}", name)
            continue
        if opt.choices and value not in opt.choices:
            raise UsageError(f"{name} must be one of {opt.choices}", name)
        if opt.check is not None:
            problem = opt.check(value)
            if problem:
                raise UsageError(f"{name} {problem} (got {value!r})", name)
    if resolved.get("energy") == "regularized" and resolved.get("kappa_m") is None:
        raise UsageError("energy=regularized requires kappa_m", "kappa_m")
    if resolved.get("barrier_kappa", 0.0) > 0 and resolved.get("kappa_m") is None:
        raise UsageError("barrier_kappa > 0 requires kappa_m", "barrier_kappa")
    if args.command == "minimize" and resolved["energy"] == "wunderlich" and resolved["eps"] <= 0:
        raise UsageError("energy=wunderlich requires eps > 0", "eps")
    return RunConfig(args.command, resolved, args.config)


# ---------------------------------------------------------------------------
# commands


def _curve(cfg: RunConfig):
    try:
        return read_curve(cfg.curve)
    except FileNotFoundError:
        raise UsageError(f"curve file not found: {cfg.curve}", "curve") from None


def _objective_config(cfg: RunConfig, energy: str, eps: float = 0.0) -> ObjectiveConfig:
    return ObjectiveConfig(energy, eps, cfg.kappa_m or 0.0, cfg.penalty_speed, cfg.penalty_length,
                           cfg.barrier_kappa, cfg.quad())


def cmd_eval(cfg: RunConfig, out: Path):
    curve = _curve(cfg)
    quad = cfg.quad()
    F = sadowsky_energy(curve, quad)
    Fe = wunderlich_energy(curve, cfg.eps, quad)
    report = {
        "eps": cfg.eps,
        "length": curve_length(curve),
        "sadowsky": F.to_dict(quad),
        "wunderlich": Fe.to_dict(quad),
        "gamma_gap_prediction": gamma_gap_prediction(curve, quad),
    }
    if cfg.kappa_m is not None:
        report["regularized"] = regularized_sadowsky_energy(curve, cfg.kappa_m, quad).to_dict(quad)
    if cfg.bending_stiffness is not None and cfg.length is not None and Fe.is_finite:
        w = 0.5 * cfg.eps * cfg.length
        report["dimensional_energy"] = dimensional_energy(Fe.value, cfg.bending_stiffness, w, cfg.length) if w > 0 else None
    write_json(out / "energy.json", report)
    write_csv(out / "nodes.csv", columns_to_rows(node_table(curve, cfg.eps, quad)))


def cmd_surface(cfg: RunConfig, out: Path):
    curve = _curve(cfg)
    quad = cfg.quad()
    S = surface_energy(curve, cfg.eps, (quad, QuadratureScheme(2, 16)))
    W = wunderlich_energy(curve, cfg.eps, quad)
    mesh = build_mesh(curve, cfg.eps, cfg.n_s, cfg.n_v)
    defects = angle_defects(mesh)
    report = {
        "eps": cfg.eps,
        "surface_energy": S.to_dict(quad),
        "wunderlich_energy": W.to_dict(quad),
        "relative_difference": abs(S.value - W.value) / W.value if S.is_finite and W.is_finite and W.value else None,
        "grid_shape": list(mesh.grid_shape),
        "vertices": mesh.n_vertices,
        "faces": mesh.n_faces,
        "max_angle_defect": float(np.max(np.abs(defects))) if defects.size else 0.0,
    }
    write_obj(out / "ribbon.obj", mesh)
    write_kappa1(out / "kappa1.csv", mesh)
    write_json(out / "surface.json", report)


def _start_curve(cfg: RunConfig):
    curve = _curve(cfg)
    if cfg.start_noise > 0:
        rng = np.random.default_rng(cfg.seed)
        coef = curve.coefficients + cfg.start_noise * rng.standard_normal(curve.coefficients.shape)
        curve = curve.with_coefficients(coef)
    return curve


def cmd_minimize(cfg: RunConfig, out: Path):
    curve = _start_curve(cfg)
    ocfg = _objective_config(cfg, cfg.energy, cfg.eps)
    result, report = minimize(curve, ocfg, cfg.max_iter, cfg.tol_grad, cfg.tol_rel_energy)
    write_json(out / "solve_report.json", report.to_dict())
    write_csv(out / "history.csv", [{"iteration": i, "objective": f, "grad_norm": g} for i, f, g in report.history])
    write_curve(out / "minimizer.json", result)


def cmd_sweep(cfg: RunConfig, out: Path):
    report = eps_sweep(_curve(cfg), cfg.eps_grid, cfg.quad())
    write_json(out / "sweep.json", report.to_dict())
    write_csv(out / "sweep.csv", report.rows(), ["eps", "kind", "value", "gap", "measure_estimate"])


def cmd_convergence(cfg: RunConfig, out: Path):
    curve = _start_curve(cfg)
    report = minimizer_convergence(curve, cfg.eps_grid, _objective_config(cfg, "sadowsky"),
                                   max_iter=cfg.max_iter, tol_grad=cfg.tol_grad, tol_rel_energy=cfg.tol_rel_energy)
    write_json(out / "convergence.json", report.to_dict())
    write_csv(out / "convergence.csv", report.rows(), ["eps", "status", "energy", "gap", "distance"])


def cmd_lsc(cfg: RunConfig, out: Path):
    base = _curve(cfg)
    phase = cfg.phase
    if phase is None:
        zeros = locate_curvature_zeros(base)
        phase = zeros[0] if zeros else 0.0
    amp, freq = cubic_schedule(cfg.count, cfg.f0, cfg.df, cfg.strength)
    seq = ProbeSequence(base, cfg.perturbation, amp, freq, phase)
    report = lsc_probe(seq, cfg.quad(), cfg.kappa_m)
    write_json(out / "lsc.json", {**report.to_dict(), "phase": phase, "perturbation": cfg.perturbation})
    write_csv(out / "lsc.csv", report.rows(), ["member", "frequency", "amplitude", "energy", "excess"])


SHAPES = {
    "circle": circle,
    "ellipse": ellipse,
    "segment": segment,
    "helix": lambda radius=0.5, pitch=0.5, **kw: helix(radius, pitch, **kw),
    "torsion_modulated": torsion_modulated,
}


def cmd_make_curve(cfg: RunConfig, out: Path):
    params = dict(cfg.param or {})
    try:
        if cfg.shape == "random_closed":
            curve = random_closed_curve(np.random.default_rng(cfg.seed), **params)
        elif cfg.shape in ("single_zero", "mobius_like"):
            curve, _ = inflection_test_curve(cfg.shape, **params)
        else:
            curve = SHAPES[cfg.shape](**params)
    except TypeError as exc:
        raise UsageError(f"bad shape parameters: {exc}", "param") from None
    write_curve(Path(cfg.output) if cfg.output else out / "curve.json", curve)


HANDLERS = {
    "eval": cmd_eval,
    "surface": cmd_surface,
    "minimize": cmd_minimize,
    "gamma-sweep": cmd_sweep,
    "minimizer-convergence": cmd_convergence,
    "lsc-probe": cmd_lsc,
    "make-curve": cmd_make_curve,
}


# ---------------------------------------------------------------------------
# entry points


def _error_payload(kind: str, message: str, location: dict) -> dict:
    return {"error_kind": kind, "location": location, "message": message}


def _report_error(payload: dict, out: Path | None):
    from .io import dumps

    sys.stderr.write(dumps(payload))
    if out is not None:
        try:
            write_json(out / "error.json", payload)
        except OSError:
            pass


def run(cfg: RunConfig) -> int:
    out = Path(cfg.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        _report_error(_error_payload("UsageError", f"cannot create output directory: {exc}", {"key": "out"}), None)
        return EXIT_USAGE
    write_json(out / "run_config.json", cfg.to_dict())
    try:
        HANDLERS[cfg.command](cfg, out)
    except UsageError as exc:
        _report_error(_error_payload("UsageError", str(exc), {"key": exc.key}), out)
        return EXIT_USAGE
    except DomainError as exc:
        _report_error(_error_payload(exc.kind, str(exc), exc.location), out)
        return EXIT_USAGE
    except RibbonError as exc:
        _report_error(_error_payload(exc.kind, str(exc), exc.location), out)
        return EXIT_DOMAIN if exc.kind in DOMAIN_KINDS else EXIT_USAGE
    return EXIT_OK


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = parse_config(argv)
    except UsageError as exc:
        _report_error(_error_payload("UsageError", str(exc), {"key": exc.key}), None)
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    return run(cfg)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
