"""Numerical experiments on the narrow-ribbon limit.

* ``eps_sweep``: F_eps on a decreasing grid, monotonicity and the eps^2 gap rate.
* ``minimizer_convergence``: minima of F_eps along a decreasing grid versus the
  Sadowsky minimum.
* ``lsc_probe``: energies along oscillating perturbation sequences that
  converge in C^2 but not in C^3, compared with the energy of their limit.
* ``inflection_test_curve``: analytic centerlines with isolated curvature zeros.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .curves import (
    CHEBYSHEV_OPEN, FOURIER_CLOSED, CurveSpec, fit_curve, locate_curvature_zeros, normalized_length,
)
from .energy import gamma_gap_prediction, regularized_sadowsky_energy, sadowsky_energy, wunderlich_energy
from .errors import DomainError, InflectionPoint, RibbonError
from .parallel import pmap
from .quadrature import DEFAULT_QUAD, QuadratureScheme
from .solver import ObjectiveConfig, minimize, objective

logger = logging.getLogger(__name__)

MIN_FIT_POINTS = 4
DEGENERATE_GAP = 1e-12


def _check_grid(eps_grid) -> np.ndarray:
    eps = np.asarray(eps_grid, dtype=float)
    if eps.ndim != 1 or eps.size == 0:
        raise DomainError("eps grid must be a non-empty 1D list")
    if np.any(eps <= 0) or not np.all(np.isfinite(eps)):
        raise DomainError("eps grid entries must be positive and finite")
    if np.any(np.diff(eps) >= 0):
        raise DomainError("eps grid must be strictly decreasing")
    return eps


def fit_gap_rate(eps, gaps) -> tuple[float, float]:
    """Log-log slope of ``gaps`` against ``eps``, and the eps -> 0 limit of ``gaps / eps^2``.

    The second number comes from a least-squares fit ``gap / eps^2 = C + D eps^2``
    (the expansion of the kernel is even in eps), evaluated at eps = 0.
    """
    eps = np.asarray(eps, dtype=float)
    gaps = np.asarray(gaps, dtype=float)
    rate = float(np.polyfit(np.log(eps), np.log(gaps), 1)[0])
    A = np.stack([np.ones_like(eps), eps**2], axis=1)
    prefactor = float(np.linalg.lstsq(A, gaps / eps**2, rcond=None)[0][0])
    return rate, prefactor


# ---------------------------------------------------------------------------
# eps sweep


@dataclass
class SweepReport:
    eps_grid: np.ndarray
    F_eps: list
    F_limit: float
    monotone: bool
    violations: list = field(default_factory=list)
    fitted_rate: float | None = None
    fitted_prefactor: float | None = None
    predicted_prefactor: float | None = None
    degenerate: bool = False
    note: str = ""

    @property
    def gaps(self) -> np.ndarray:
        return np.array([float(v) - self.F_limit if v.is_finite else math.inf for v in self.F_eps])

    def to_dict(self) -> dict:
        return {
            "eps_grid": [float(e) for e in self.eps_grid],
            "F_eps": [v.to_dict() for v in self.F_eps],
            "F_limit": self.F_limit,
            "monotone": self.monotone,
            "violations": self.violations,
            "fitted_rate": self.fitted_rate,
            "fitted_prefactor": self.fitted_prefactor,
            "predicted_prefactor": self.predicted_prefactor,
            "degenerate": self.degenerate,
            "note": self.note,
        }

    def rows(self) -> list[dict]:
        out = []
        for e, v, gap in zip(self.eps_grid, self.F_eps, self.gaps):
            out.append({
                "eps": float(e),
                "kind": v.kind,
                "value": v.value if v.is_finite else math.inf,
                "gap": gap,
                "measure_estimate": v.blowup.measure_estimate if v.blowup else 0.0,
            })
        return out


def eps_sweep(curve: CurveSpec, eps_grid, quad: QuadratureScheme = DEFAULT_QUAD,
              fit_points: int | None = None) -> SweepReport:
    """Evaluate F_eps on a strictly decreasing grid and fit the approach to F.

    The fit uses the ``fit_points`` smallest finite entries (all finite
    entries by default, at least four).
    """
    eps = _check_grid(eps_grid)
    values = pmap(lambda e: wunderlich_energy(curve, float(e), quad), eps)
    F = float(sadowsky_energy(curve, quad))
    # larger eps first: each entry must dominate every later one (inf dominates all)
    violations = []
    for i in range(len(values) - 1):
        a, b = values[i], values[i + 1]
        if a.is_finite and (not b.is_finite or b.value > a.value):
            violations.append(i)
    report = SweepReport(eps, values, F, not violations, violations)
    finite = [i for i, v in enumerate(values) if v.is_finite]
    if len(finite) < MIN_FIT_POINTS:
        report.note = f"only {len(finite)} finite entries; no rate fit"
        return report
    use = finite[-fit_points:] if fit_points else finite
    gaps = np.array([values[i].value - F for i in use])
    e_use = eps[use]
    if np.max(np.abs(gaps)) <= DEGENERATE_GAP * max(1.0, abs(F)) or np.any(gaps <= 0):
        report.degenerate = True
        report.note = "gaps vanish to rounding; no rate fit"
        return report
    report.fitted_rate, report.fitted_prefactor = fit_gap_rate(e_use, gaps)
    report.predicted_prefactor = gamma_gap_prediction(curve, quad)
    return report


# ---------------------------------------------------------------------------
# minimizer convergence


@dataclass
class ConvergenceEntry:
    eps: float
    status: str  # "ok" or an error kind
    energy: float | None = None
    objective: float | None = None
    iterations: int = 0
    coefficients: np.ndarray | None = None
    message: str = ""

    def to_dict(self) -> dict:
        return {
            "eps": self.eps,
            "status": self.status,
            "energy": self.energy,
            "objective": self.objective,
            "iterations": self.iterations,
            "message": self.message,
        }


@dataclass
class ConvergenceReport:
    entries: list
    sadowsky: ConvergenceEntry
    gaps: list
    distances: list
    monotone: bool
    bounded_below: bool
    fitted_rate: float | None = None

    @property
    def m0(self) -> float | None:
        return self.sadowsky.energy

    def to_dict(self) -> dict:
        return {
            "entries": [e.to_dict() for e in self.entries],
            "sadowsky": self.sadowsky.to_dict(),
            "gaps": self.gaps,
            "coefficient_distances": self.distances,
            "monotone": self.monotone,
            "bounded_below": self.bounded_below,
            "fitted_rate": self.fitted_rate,
        }

    def rows(self) -> list[dict]:
        return [{"eps": e.eps, "status": e.status, "energy": e.energy, "gap": g, "distance": d}
                for e, g, d in zip(self.entries, self.gaps, self.distances)]


def _solve(curve, cfg, eps, kwargs):
    try:
        start = objective(curve, cfg)
    except InflectionPoint as exc:
        return None, ConvergenceEntry(eps, exc.kind, message=str(exc))
    if not math.isfinite(start):
        return None, ConvergenceEntry(eps, "blowup_at_start", message="objective is +inf at the starting curve")
    try:
        out, report = minimize(curve, cfg, **kwargs)
    except RibbonError as exc:
        return None, ConvergenceEntry(eps, exc.kind, message=str(exc))
    entry = ConvergenceEntry(eps, "ok", float(report.final_energy), report.final_objective, report.iterations,
                             out.coefficients.copy())
    return (out, report), entry


def minimizer_convergence(curve0: CurveSpec, eps_grid, cfg: ObjectiveConfig, rel_tol: float = 1e-9,
                          **minimize_kwargs) -> ConvergenceReport:
    """Minimize F_eps along a decreasing grid, then F, warm-starting each solve.

    Each solve starts from the previous minimizer, so ``F_{eps2} <= F_{eps1}``
    at the start point makes the computed minima nonincreasing; the Sadowsky
    solve starts from the smallest-eps minimizer.  Failed solves are recorded
    with their error kind and do not advance the warm start.
    """
    eps = _check_grid(eps_grid)
    current = curve0
    multiplier = cfg.length_multiplier
    entries = []
    for e in eps:
        ecfg = replace(cfg, energy_kind="wunderlich", eps=float(e), length_multiplier=multiplier)
        result, entry = _solve(current, ecfg, float(e), minimize_kwargs)
        entries.append(entry)
        if result is not None:
            current, report = result
            multiplier = report.length_multiplier
        else:
            logger.warning("eps=%g: %s", e, entry.message)
    scfg = replace(cfg, energy_kind="sadowsky", eps=0.0, length_multiplier=multiplier)
    result, sad = _solve(current, scfg, 0.0, minimize_kwargs)
    gaps, distances = [], []
    for entry in entries:
        if entry.status == "ok" and sad.status == "ok":
            gaps.append(entry.energy - sad.energy)
            distances.append(float(np.linalg.norm(entry.coefficients - sad.coefficients)))
        else:
            gaps.append(None)
            distances.append(None)
    ok = [en for en in entries if en.status == "ok"]
    monotone = all(b.energy <= a.energy + rel_tol * (1.0 + abs(a.energy)) for a, b in zip(ok, ok[1:]))
    bounded = sad.status == "ok" and all(g >= -rel_tol * (1.0 + abs(sad.energy)) for g in gaps if g is not None)
    report = ConvergenceReport(entries, sad, gaps, distances, monotone, bounded)
    pos = [(en.eps, g) for en, g in zip(entries, gaps) if g is not None and g > DEGENERATE_GAP * (1 + abs(sad.energy))]
    if len(pos) >= 3:
        e, g = np.array(pos).T
        report.fitted_rate = float(np.polyfit(np.log(e), np.log(g), 1)[0])
    return report


# ---------------------------------------------------------------------------
# lower-semicontinuity probes

PERTURBATION_KINDS = ("torsion_oscillation", "coefficient_oscillation")
DEFAULT_DIRECTION = np.array([1.0, 2.0, 2.0]) / 3.0


@dataclass(frozen=True, eq=False)
class ProbeSequence:
    base_curve: CurveSpec
    perturbation_kind: str
    amplitude_schedule: np.ndarray
    frequency_schedule: np.ndarray
    phase: float | None = None

    def __post_init__(self):
        if self.perturbation_kind not in PERTURBATION_KINDS:
            raise DomainError(f"unknown perturbation_kind {self.perturbation_kind!r}")
        amp = np.asarray(self.amplitude_schedule, dtype=float)
        freq = np.asarray(self.frequency_schedule)
        if amp.shape != freq.shape or amp.ndim != 1 or amp.size < 4:
            raise DomainError("schedules must be 1D of equal length >= 4")
        if np.any(amp < 0) or np.any(np.diff(amp) > 0):
            raise DomainError("amplitudes must be nonnegative and nonincreasing")
        if np.any(freq != np.round(freq)) or np.any(freq < 1) or np.any(np.diff(freq) <= 0):
            raise DomainError("frequencies must be increasing positive integers")
        object.__setattr__(self, "amplitude_schedule", amp)
        object.__setattr__(self, "frequency_schedule", freq.astype(int))


def cubic_schedule(count: int = 8, f0: int = 4, df: int = 4, strength: float = 10.0):
    """Frequencies ``f0 + k df`` with amplitudes ``strength / (2 pi f)^3``.

    The perturbation then converges to zero uniformly with two derivatives
    while its third derivative keeps oscillating with size ``strength``.
    """
    freq = f0 + df * np.arange(count)
    return strength / (2.0 * np.pi * freq) ** 3, freq


def best_fit_normal(curve: CurveSpec) -> np.ndarray:
    pts = curve(np.linspace(0.0, 1.0, 512))
    _, _, vt = np.linalg.svd(pts - pts.mean(axis=0))
    n = vt[-1]
    return n * np.sign(n[np.argmax(np.abs(n))])


def probe_member(seq: ProbeSequence, k: int) -> CurveSpec:
    """``base + a_k sin(2 pi f_k (t - phase)) d`` in the base curve's basis."""
    base = seq.base_curve
    a = float(seq.amplitude_schedule[k])
    f = int(seq.frequency_schedule[k])
    if a == 0.0:
        return base
    d = best_fit_normal(base) if seq.perturbation_kind == "torsion_oscillation" else DEFAULT_DIRECTION
    t0 = 0.0 if seq.phase is None else float(seq.phase)
    if base.basis_kind == FOURIER_CLOSED:
        n = max(base.n, 2 * f + 1)
        coef = np.zeros((3, n))
        coef[:, : base.n] = base.coefficients
        # sin(w (t - t0)) = cos(w t0) sin(w t) - sin(w t0) cos(w t)
        w0 = 2.0 * np.pi * f * t0
        coef[:, 2 * f - 1] += -a * math.sin(w0) * d
        coef[:, 2 * f] += a * math.cos(w0) * d
        return CurveSpec(FOURIER_CLOSED, coef, None, base.target_length)

    def fn(t):
        return base(t) + a * np.sin(2.0 * np.pi * f * (t - t0))[:, None] * d

    n = max(base.n, 2 * int(math.ceil(math.pi * f)) + 48)
    out = fit_curve(fn, CHEBYSHEV_OPEN, n, target_length=base.target_length)
    return CurveSpec(CHEBYSHEV_OPEN, out.coefficients, base.boundary_data, base.target_length)


@dataclass
class LscReport:
    base_energy: float
    member_energies: list
    liminf: float
    margin: float
    tolerance: float
    passed: bool
    energy_kind: str
    kappa_m: float | None
    frequencies: list
    amplitudes: list

    def to_dict(self) -> dict:
        return {
            "base_energy": self.base_energy,
            "member_energies": self.member_energies,
            "liminf": self.liminf,
            "margin": self.margin,
            "tolerance": self.tolerance,
            "passed": self.passed,
            "energy_kind": self.energy_kind,
            "kappa_m": self.kappa_m,
        }

    def rows(self) -> list[dict]:
        return [{"member": k, "frequency": f, "amplitude": a, "energy": e, "excess": e - self.base_energy}
                for k, (f, a, e) in enumerate(zip(self.frequencies, self.amplitudes, self.member_energies))]


def _has_flat_spot(curve: CurveSpec, grid: int = 4096) -> bool:
    t = np.linspace(0.0, 1.0, grid + 1)
    d = curve.derivatives(t, 2)
    sp = np.linalg.norm(d[1], axis=-1)
    k = np.linalg.norm(np.cross(d[1], d[2]), axis=-1) / sp**3
    return bool(np.min(k) < 1e-6 * max(1.0, float(np.max(k))))


def lsc_probe(seq: ProbeSequence, quad: QuadratureScheme = DEFAULT_QUAD, kappa_m: float | None = None,
              rel_tol: float = 1e-6) -> LscReport:
    """Energies of the sequence members against the base energy.

    The liminf is estimated by the minimum over the last half of the
    sequence.  If the base or any member has (numerically) vanishing
    curvature, every curve is evaluated with the curvature-floored integrand
    at ``kappa_m``; without ``kappa_m`` that is an error naming the member.
    Quadrature panels are split at the base curve's curvature zeros.
    """
    base = seq.base_curve
    zeros = tuple(locate_curvature_zeros(base))
    members = [probe_member(seq, k) for k in range(len(seq.amplitude_schedule))]
    flat = [k for k, m in enumerate(members) if _has_flat_spot(m)]
    regularize = bool(zeros) or bool(flat)
    if regularize and kappa_m is None:
        which = flat[0] if flat else "base"
        raise DomainError(f"member {which} has a curvature zero; supply kappa_m to regularize", member=which)

    def energy(curve: CurveSpec, f: int = 0) -> float:
        q = QuadratureScheme(max(quad.panels, 2 * f), quad.nodes_per_panel)
        if regularize:
            return float(regularized_sadowsky_energy(curve, kappa_m, q, breakpoints=zeros))
        return float(sadowsky_energy(curve, q))

    F0 = energy(base)
    freqs = [int(f) for f in seq.frequency_schedule]
    values = pmap(lambda km: energy(km[1], freqs[km[0]]), list(enumerate(members)))
    tail = values[len(values) // 2:]
    liminf = min(tail)
    margin = liminf - F0
    tol = rel_tol * (1.0 + abs(F0))
    return LscReport(F0, values, liminf, margin, tol, margin >= -tol, "regularized" if regularize else "sadowsky",
                     kappa_m if regularize else None, freqs, [float(a) for a in seq.amplitude_schedule])


# ---------------------------------------------------------------------------
# curves with inflection points

INFLECTION_KINDS = ("single_zero", "mobius_like")


def inflection_test_curve(kind: str, **params) -> tuple[CurveSpec, list[float]]:
    """Unit-length analytic curve whose curvature vanishes on a finite set.

    ``single_zero``: open ``(x, a x^3, b x^5)`` with ``x = t - t_star`` and a
    single zero at ``t_star``.  ``mobius_like``: closed
    ``(cos th - cos 2th / 4, sin th + b2 sin 2th, h sin 3th)`` whose second
    derivative vanishes at th = 0.  Returns the curve and its curvature zeros.
    """
    if kind == "single_zero":
        t_star = float(params.pop("t_star", 0.5))
        a = float(params.pop("a", 1.0))
        b = float(params.pop("b", 0.5))
        n = int(params.pop("n", 8))
        _reject_extra(params)
        if not 0.0 < t_star < 1.0:
            raise DomainError("t_star must lie in (0, 1)", t_star=t_star)
        if a == 0.0 and b == 0.0:
            raise DomainError("a = b = 0 gives a straight line (curvature zero everywhere)")

        def fn(t):
            x = t - t_star
            return np.stack([x, a * x**3, b * x**5], axis=-1)

        curve = normalized_length(fit_curve(fn, CHEBYSHEV_OPEN, max(n, 8)))
        expected = 1
    elif kind == "mobius_like":
        b2 = float(params.pop("b2", 0.0))
        h = float(params.pop("h", 0.3))
        _reject_extra(params)
        coef = np.zeros((3, 9))
        coef[0, 1], coef[0, 3] = 1.0, -0.25
        coef[1, 2], coef[1, 4] = 1.0, b2
        coef[2, 6] = h
        curve = normalized_length(CurveSpec(FOURIER_CLOSED, coef))
        expected = None
    else:
        raise DomainError(f"unknown inflection curve kind {kind!r}", kind=kind)
    if _zero_measure_fraction(curve) > 0:
        raise DomainError(f"{kind} parameters give curvature zero on an interval")
    zeros = locate_curvature_zeros(curve)
    if not zeros:
        raise DomainError(f"{kind} parameters give no curvature zero")
    if expected is not None and len(zeros) != expected:
        raise DomainError(f"{kind} parameters give {len(zeros)} curvature zeros, expected {expected}")
    return curve, zeros


def _reject_extra(params: dict):
    if params:
        raise DomainError(f"unknown parameters: {sorted(params)}")


def _zero_measure_fraction(curve: CurveSpec, grid: int = 4096) -> float:
    """Fraction of a dense grid where the curvature is below 1e-8 of its maximum, after discarding isolated hits."""
    t = np.linspace(0.0, 1.0, grid + 1)
    d = curve.derivatives(t, 2)
    sp = np.linalg.norm(d[1], axis=-1)
    if np.any(sp == 0):
        return 1.0
    k = np.linalg.norm(np.cross(d[1], d[2]), axis=-1) / sp**3
    low = k <= 1e-8 * max(float(np.max(k)), 1e-300)
    runs = low[:-1] & low[1:] & np.r_[low[2:], False] if grid > 2 else low
    return float(np.mean(runs))


__all__ = [
    "SweepReport", "eps_sweep", "fit_gap_rate", "ConvergenceReport", "minimizer_convergence",
    "ProbeSequence", "cubic_schedule", "probe_member", "LscReport", "lsc_probe", "inflection_test_curve",
]
