"""Penalized minimization of ribbon energies over curve coefficients.

The objective is ``energy + penalty_speed * int (|c'|/L - 1)^2 dt
+ penalty_length * (L - L0)^2 (+ barrier)``.  For curves without end data the
energy is evaluated on the curve rescaled to length ``L0``, which makes it
scale invariant; the length penalty then only fixes the gauge and is zero at
the optimum.  Clamped curves keep their end data exactly by optimizing in the
null space of the endpoint constraint matrix, and their length is enforced
with an augmented-Lagrangian multiplier.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import null_space

from .curves import (
    CHEBYSHEV_OPEN, CurveSpec, boundary_residuals, clamped_constraint_matrix, frenet_arrays, impose_boundary_data,
)
from .energy import EnergyValue, regularized_sadowsky_energy, sadowsky_energy, wunderlich_energy
from .errors import DomainError, GradientBlocked, InflectionPoint, NoDescent
from .parallel import pmap
from .quadrature import DEFAULT_QUAD, QuadratureScheme

logger = logging.getLogger(__name__)

ENERGY_KINDS = ("sadowsky", "wunderlich", "regularized")
FD_STEP = 1e-6
MAX_HALVINGS = 40
ARMIJO = 1e-4
LENGTH_TOL = 1e-8
CHECK_GRID = 256


@dataclass(frozen=True)
class ObjectiveConfig:
    energy_kind: str = "sadowsky"
    eps: float = 0.0
    kappa_m: float = 0.0
    penalty_speed: float = 1e4
    penalty_length: float = 1e6
    barrier_kappa: float = 0.0
    quad: QuadratureScheme = DEFAULT_QUAD
    length_multiplier: float = 0.0

    def __post_init__(self):
        if self.energy_kind not in ENERGY_KINDS:
            raise DomainError(f"unknown energy_kind {self.energy_kind!r}", energy_kind=self.energy_kind)
        for name in ("eps", "kappa_m", "penalty_speed", "penalty_length", "barrier_kappa"):
            val = getattr(self, name)
            if not (math.isfinite(val) and val >= 0):
                raise DomainError(f"{name} must be finite and >= 0", **{name: val})
        if self.energy_kind == "regularized" and self.kappa_m <= 0:
            raise DomainError("regularized energy needs kappa_m > 0", kappa_m=self.kappa_m)
        if self.barrier_kappa > 0 and self.kappa_m <= 0:
            raise DomainError("curvature barrier needs kappa_m > 0", kappa_m=self.kappa_m)
        if self.penalty_speed == 0 and self.penalty_length == 0:
            raise DomainError("at least one of penalty_speed, penalty_length must be positive")

    def to_dict(self) -> dict:
        return {
            "energy_kind": self.energy_kind,
            "eps": self.eps,
            "kappa_m": self.kappa_m,
            "penalty_speed": self.penalty_speed,
            "penalty_length": self.penalty_length,
            "barrier_kappa": self.barrier_kappa,
            "quad": self.quad.to_dict(),
        }


@dataclass
class SolveReport:
    final_energy: EnergyValue
    final_objective: float
    iterations: int
    grad_norm: float
    constraint_residuals: dict
    converged: bool
    history: list = field(default_factory=list)  # (iteration, objective, grad_norm)
    stop_reason: str = ""
    length_multiplier: float = 0.0

    def to_dict(self) -> dict:
        return {
            "final_energy": self.final_energy.to_dict(),
            "final_objective": self.final_objective,
            "iterations": self.iterations,
            "grad_norm": self.grad_norm,
            "constraint_residuals": self.constraint_residuals,
            "converged": self.converged,
            "stop_reason": self.stop_reason,
            "length_multiplier": self.length_multiplier,
        }


# ---------------------------------------------------------------------------
# objective


def _length_and_speed_penalty(curve: CurveSpec, quad: QuadratureScheme) -> tuple[float, float]:
    t, w = quad.nodes()
    sp = np.linalg.norm(curve.derivatives(t, 1)[1], axis=-1)
    L = float(np.dot(w, sp))
    return L, float(np.dot(w, (sp / L - 1.0) ** 2))


def _energy_curve(curve: CurveSpec, L: float) -> CurveSpec:
    """The curve whose energy is charged: rescaled to target length unless clamped."""
    if curve.boundary_data is not None:
        return curve
    s = curve.target_length / L
    return CurveSpec(curve.basis_kind, s * curve.coefficients, None, curve.target_length)


def _raw_energy(curve: CurveSpec, cfg: ObjectiveConfig) -> EnergyValue:
    if cfg.energy_kind == "sadowsky":
        return sadowsky_energy(curve, cfg.quad)
    if cfg.energy_kind == "wunderlich":
        return wunderlich_energy(curve, cfg.eps, cfg.quad)
    return regularized_sadowsky_energy(curve, cfg.kappa_m, cfg.quad)


def energy_value(curve: CurveSpec, cfg: ObjectiveConfig) -> EnergyValue:
    """The energy part of the objective (no penalties)."""
    L, _ = _length_and_speed_penalty(curve, cfg.quad)
    return _raw_energy(_energy_curve(curve, L), cfg)


def _barrier(curve: CurveSpec, cfg: ObjectiveConfig) -> float:
    """``int -log(1 - kappa_m / kappa) ds``: zero far from the floor, +inf at or below it."""
    t, w = cfg.quad.nodes()
    fa = frenet_arrays(curve, t, check=False)
    ratio = cfg.kappa_m / fa.kappa
    if not np.all(ratio < 1.0):
        return math.inf
    return float(np.dot(w, -np.log1p(-ratio) * fa.speed))


def objective(curve: CurveSpec, cfg: ObjectiveConfig) -> float:
    """Energy plus penalties; ``inf`` when the energy blows up.  Inflection errors propagate."""
    L, speed_pen = _length_and_speed_penalty(curve, cfg.quad)
    target = _energy_curve(curve, L)
    energy = _raw_energy(target, cfg)
    if not energy.is_finite:
        return math.inf
    dL = L - curve.target_length
    total = energy.value + cfg.penalty_speed * speed_pen + cfg.penalty_length * dL**2 + cfg.length_multiplier * dL
    if cfg.barrier_kappa > 0:
        total += cfg.barrier_kappa * _barrier(target, cfg)
    return total


def _safe_objective(curve: CurveSpec, cfg: ObjectiveConfig) -> float:
    try:
        return objective(curve, cfg)
    except InflectionPoint:
        return math.inf


def gradient(curve: CurveSpec, cfg: ObjectiveConfig, step: float = FD_STEP) -> np.ndarray:
    """Central-difference gradient with respect to all coefficients, shape (3, N).

    The step for coefficient ``c`` is ``step * (1 + |c|)``.
    """
    coef = curve.coefficients
    flat = coef.ravel()

    def probe(i):
        h = step * (1.0 + abs(flat[i]))
        plus = flat.copy()
        minus = flat.copy()
        plus[i] += h
        minus[i] -= h
        fp = _safe_objective(curve.with_coefficients(plus.reshape(coef.shape)), cfg)
        fm = _safe_objective(curve.with_coefficients(minus.reshape(coef.shape)), cfg)
        if not (math.isfinite(fp) and math.isfinite(fm)):
            return i, None
        return i, (fp - fm) / (2.0 * h)

    out = np.empty(flat.size)
    for i, val in pmap(probe, range(flat.size)):
        if val is None:
            raise GradientBlocked(i)
        out[i] = val
    return out.reshape(coef.shape)


# ---------------------------------------------------------------------------
# minimization


def mode_scaling(curve: CurveSpec, power: float) -> np.ndarray:
    """Per-column scale ``(1 + k)^-power`` with ``k`` the polynomial degree or Fourier wavenumber."""
    j = np.arange(curve.n)
    k = j if curve.basis_kind == CHEBYSHEV_OPEN else (j + 1) // 2
    return (1.0 + k) ** (-float(power))


class _Coordinates:
    """Free optimization variables ``z`` with coefficients ``base + (M z_row)`` per component.

    ``M = S Z``: ``S`` damps high modes (their derivatives grow like a power
    of the degree, which makes the objective stiff in raw coefficients) and
    ``Z`` spans the null space of the clamped end constraints.
    """

    def __init__(self, curve: CurveSpec, precondition: float):
        self.curve = curve
        self.base = curve.coefficients.copy()
        S = np.diag(mode_scaling(curve, precondition))
        if curve.boundary_data is not None:
            self.M = S @ null_space(clamped_constraint_matrix(curve.n) @ S)
        else:
            self.M = S
        self.m = self.M.shape[1]

    def x0(self) -> np.ndarray:
        return np.zeros(3 * self.m)

    def coefficients(self, x: np.ndarray) -> np.ndarray:
        return self.base + x.reshape(3, self.m) @ self.M.T

    def to_curve(self, x: np.ndarray) -> CurveSpec:
        return self.curve.with_coefficients(self.coefficients(x))


def _reduced_gradient(coords: _Coordinates, x: np.ndarray, cfg: ObjectiveConfig, step: float) -> np.ndarray:
    """Central differences in the optimization variables (same step rule as :func:`gradient`)."""

    def probe(i):
        h = step * (1.0 + abs(x[i]))
        e = np.zeros_like(x)
        e[i] = h
        fp = _safe_objective(coords.to_curve(x + e), cfg)
        fm = _safe_objective(coords.to_curve(x - e), cfg)
        if not (math.isfinite(fp) and math.isfinite(fm)):
            return None
        return (fp - fm) / (2.0 * h)

    vals = pmap(probe, range(x.size))
    for i, val in enumerate(vals):
        if val is None:
            raise GradientBlocked(i)
    return np.array(vals)


def constraint_residuals(curve: CurveSpec, kappa_m: float = 0.0, quad: QuadratureScheme = DEFAULT_QUAD) -> dict:
    L, _ = _length_and_speed_penalty(curve, quad)
    t = np.linspace(0.0, 1.0, CHECK_GRID)
    d = curve.derivatives(t, 2)
    sp = np.linalg.norm(d[1], axis=-1)
    kappa = np.linalg.norm(np.cross(d[1], d[2]), axis=-1) / sp**3
    bc = boundary_residuals(curve)
    return {
        "speed": float(np.max(np.abs(sp / L - 1.0))),
        "length": abs(L - curve.target_length) / curve.target_length,
        "bc": max(bc.values()) if bc else 0.0,
        "kappa_min": float(np.min(kappa)),
        "kappa_floor": kappa_m,
    }


def _bfgs(coords: _Coordinates, cfg: ObjectiveConfig, max_iter: int, tol_grad: float,
          tol_rel_energy: float, step: float):
    def fun(x):
        return _safe_objective(coords.to_curve(x), cfg)

    def grad(x):
        return _reduced_gradient(coords, x, cfg, step)

    x = coords.x0()
    f = fun(x)
    if not math.isfinite(f):
        raise DomainError("objective is infinite at the starting curve")
    g = grad(x)
    gnorm = float(np.linalg.norm(g))
    history = [(0, f, gnorm)]
    n = x.size
    H = np.eye(n) * min(1.0, 1e-2 / max(gnorm, 1e-300))
    restarted = False
    it = 0
    reason = "max_iter"
    converged = False
    while True:
        if gnorm <= tol_grad:
            reason, converged = "grad_norm", True
            break
        if len(history) > 5:
            f_old = history[-6][1]
            if abs(f_old - f) <= tol_rel_energy * max(abs(f), 1.0):
                reason, converged = "rel_energy", True
                break
        if it >= max_iter:
            break
        it += 1
        d = -H @ g
        slope = float(g @ d)
        if not slope < 0:
            H = np.eye(n) * min(1.0, 1e-2 / gnorm)
            d = -H @ g
            slope = float(g @ d)
        alpha = 1.0
        accepted = False
        for _ in range(MAX_HALVINGS):
            f_new = fun(x + alpha * d)
            if math.isfinite(f_new) and f_new <= f + ARMIJO * alpha * slope:
                try:
                    # a point whose probes cross the blowup set cannot be iterated from
                    g_new = grad(x + alpha * d)
                    accepted = True
                    break
                except GradientBlocked:
                    pass
            alpha *= 0.5
        if not accepted:
            if not restarted:
                # fall back to a scaled steepest-descent step once
                restarted = True
                H = np.eye(n) * min(1.0, 1e-2 / gnorm)
                it -= 1
                continue
            report = (it, f, gnorm, history)
            raise NoDescent(f"line search failed {MAX_HALVINGS} times at iteration {it}",
                            _partial_report(coords, x, cfg, report))
        restarted = False
        s = alpha * d
        x_new = x + s
        y = g_new - g
        sy = float(s @ y)
        if sy > 1e-12 * np.linalg.norm(s) * np.linalg.norm(y):
            if len(history) == 1:
                H = np.eye(n) * (sy / float(y @ y))
            rho = 1.0 / sy
            Hy = H @ y
            H = H - rho * (np.outer(s, Hy) + np.outer(Hy, s)) + (rho * rho * float(y @ Hy) + rho) * np.outer(s, s)
        x, f, g = x_new, f_new, g_new
        gnorm = float(np.linalg.norm(g))
        history.append((it, f, gnorm))
    return x, f, gnorm, history, converged, reason


def _partial_report(coords, x, cfg, state) -> SolveReport:
    it, f, gnorm, history = state
    curve = coords.to_curve(x)
    return SolveReport(energy_value(curve, cfg), f, it, gnorm, constraint_residuals(curve, cfg.kappa_m, cfg.quad),
                       False, list(history), "no_descent", cfg.length_multiplier)


def minimize(curve0: CurveSpec, cfg: ObjectiveConfig, max_iter: int = 500, tol_grad: float = 1e-4,
             tol_rel_energy: float = 1e-12, step: float = FD_STEP,
             length_rounds: int = 10, precondition: float = 2.0) -> tuple[CurveSpec, SolveReport]:
    """Quasi-Newton (BFGS) descent with Armijo backtracking; +inf trial points count as failures.

    Returns the minimizing curve and a :class:`SolveReport`.  For clamped
    curves the length multiplier is updated between warm-started rounds
    until the relative length error is below ``LENGTH_TOL``; the reported
    history is that of the final round.
    """
    clamped = curve0.boundary_data is not None
    curve = impose_boundary_data(curve0) if clamped else curve0
    total_iter = 0
    rounds = length_rounds if (clamped and cfg.penalty_length > 0) else 1
    for _ in range(rounds):
        coords = _Coordinates(curve, precondition)
        x, f, gnorm, history, converged, reason = _bfgs(coords, cfg, max_iter, tol_grad, tol_rel_energy, step)
        total_iter += len(history) - 1
        curve = coords.to_curve(x)
        if rounds == 1:
            break
        L, _ = _length_and_speed_penalty(curve, cfg.quad)
        dL = L - curve.target_length
        if abs(dL) <= LENGTH_TOL * curve.target_length:
            break
        cfg = replace(cfg, length_multiplier=cfg.length_multiplier + 2.0 * cfg.penalty_length * dL)
    if not clamped:
        L, _ = _length_and_speed_penalty(curve, cfg.quad)
        curve = _energy_curve(curve, L)
        f = objective(curve, cfg)
    report = SolveReport(
        energy_value(curve, cfg), f, total_iter, gnorm,
        constraint_residuals(curve, cfg.kappa_m, cfg.quad), converged, history, reason, cfg.length_multiplier,
    )
    return curve, report


__all__ = [
    "ObjectiveConfig", "SolveReport", "objective", "energy_value", "gradient", "minimize",
    "constraint_residuals",
]
