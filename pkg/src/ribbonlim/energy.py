"""Sadowsky and Wunderlich bending energies of a ribbon centerline.

All energies are arclength integrals ``int f ds`` evaluated as ``int f |c'| dt``
with composite Gauss-Legendre quadrature on the parameter interval.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .curves import KAPPA_FLOOR_EVAL, CurveSpec, FrenetSample, frenet_arrays, frenet_from_derivatives
from .errors import DomainError, InflectionPoint
from .quadrature import DEFAULT_QUAD, QuadratureScheme

logger = logging.getLogger(__name__)

SERIES_SWITCH = 1e-3
DIAGNOSTIC_GRID = 4096


# ---------------------------------------------------------------------------
# extended reals


@dataclass(frozen=True)
class Blowup:
    measure_estimate: float
    first_t: float

    def to_dict(self) -> dict:
        return {"measure_estimate": self.measure_estimate, "first_t": self.first_t}


@dataclass(frozen=True)
class EnergyValue:
    """A value in [0, +inf]; infinite values carry a blowup diagnostic."""

    kind: str
    value: float | None = None
    blowup: Blowup | None = None
    warning: str | None = None

    def __post_init__(self):
        if self.kind == "finite":
            if self.value is None or not math.isfinite(self.value):
                raise DomainError("finite EnergyValue needs a finite value")
        elif self.kind == "infinite":
            if self.blowup is None or not self.blowup.measure_estimate > 0:
                raise DomainError("infinite EnergyValue needs a blowup with positive measure")
        else:
            raise DomainError(f"unknown EnergyValue kind {self.kind!r}")

    @classmethod
    def finite(cls, value: float, warning: str | None = None) -> "EnergyValue":
        return cls("finite", float(value), None, warning)

    @classmethod
    def infinite(cls, measure_estimate: float, first_t: float) -> "EnergyValue":
        return cls("infinite", None, Blowup(float(measure_estimate), float(first_t)))

    @property
    def is_finite(self) -> bool:
        return self.kind == "finite"

    def __float__(self) -> float:
        return self.value if self.is_finite else math.inf

    def _key(self):
        # infinite values are ordered among themselves by blowup measure (diagnostic only)
        return (0, self.value, 0.0) if self.is_finite else (1, 0.0, self.blowup.measure_estimate)

    def __lt__(self, other: "EnergyValue") -> bool:
        return self._key() < other._key()

    def __le__(self, other: "EnergyValue") -> bool:
        return self._key() <= other._key()

    def __add__(self, other):
        if isinstance(other, EnergyValue):
            if not self.is_finite:
                return self
            if not other.is_finite:
                return other
            return EnergyValue.finite(self.value + other.value)
        if not self.is_finite:
            return self
        return EnergyValue.finite(self.value + float(other))

    __radd__ = __add__

    def to_dict(self, quad: QuadratureScheme | None = None) -> dict:
        out: dict = {"kind": self.kind}
        if self.is_finite:
            out["value"] = self.value
        else:
            out["blowup"] = self.blowup.to_dict()
        if self.warning:
            out["warning"] = self.warning
        if quad is not None:
            out["quad"] = quad.to_dict()
        return out


# ---------------------------------------------------------------------------
# kernel


def eval_g(x):
    """Width kernel ``g(x) = ln((2 + x)/(2 - x)) / x`` with g(0) = 1 and +inf for |x| >= 2.

    Uses ``2 atanh(x/2) / x``, which equals the log form without its
    cancellation, and the series ``1 + x^2/12 + x^4/80 + x^6/448`` near 0.
    Accepts scalars or arrays.
    """
    x = np.asarray(x, dtype=float)
    ax = np.abs(x)
    out = np.full(x.shape, np.inf)
    small = ax < SERIES_SWITCH
    x2 = x[small] ** 2
    out[small] = 1.0 + x2 * (1.0 / 12.0 + x2 * (1.0 / 80.0 + x2 / 448.0))
    mid = ~small & (ax < 2.0)
    out[mid] = 2.0 * np.arctanh(0.5 * ax[mid]) / ax[mid]
    out[np.isnan(x)] = np.nan
    return float(out) if out.ndim == 0 else out


def g_series(x):
    x2 = np.asarray(x, dtype=float) ** 2
    return 1.0 + x2 / 12.0 + x2**2 / 80.0 + x2**3 / 448.0


# ---------------------------------------------------------------------------
# integrands


def _require_curvature(sample: FrenetSample, floor: float = KAPPA_FLOOR_EVAL):
    kappa = np.asarray(sample.kappa)
    bad = ~(kappa >= floor)
    if np.any(bad):
        i = int(np.argmax(np.atleast_1d(bad)))
        t = np.atleast_1d(getattr(sample, "t_param", np.nan))
        raise InflectionPoint(float(t[min(i, t.size - 1)]), float(np.atleast_1d(kappa)[i]))


def sadowsky_integrand(sample: FrenetSample):
    """``kappa^2 (1 + eta^2)^2``."""
    _require_curvature(sample)
    k = np.asarray(sample.kappa)
    e = np.asarray(sample.eta)
    out = k**2 * (1.0 + e**2) ** 2
    return float(out) if out.ndim == 0 else out


def wunderlich_integrand(sample: FrenetSample, eps: float):
    """``kappa^2 (1 + eta^2)^2 g(eps eta')``; +inf exactly where |eps eta'| >= 2."""
    if eps < 0:
        raise DomainError("eps must be >= 0", eps=eps)
    base = sadowsky_integrand(sample)
    if eps == 0:
        return base
    return base * eval_g(eps * np.asarray(sample.eta_prime))


# ---------------------------------------------------------------------------
# blowup set {|eps eta'| >= 2}


def _eta_prime_at(curve: CurveSpec, t: float) -> float:
    d = curve.derivatives(np.array([t]), 4)
    return float(frenet_from_derivatives(d)[5][0])


def blowup_set(curve: CurveSpec, eps: float, grid: int = DIAGNOSTIC_GRID):
    """Locate ``{t : |eps eta'(t)| >= 2}`` as a list of parameter intervals.

    The dense grid brackets level crossings, which are then polished by
    Brent's method; grid cells whose interior peak exceeds the level while
    both ends sit below it are caught by a bounded maximization.  Returns
    ``(intervals, touches)`` where ``touches`` are isolated parameters at
    which the level is met only tangentially (a null set).
    """
    if eps <= 0:
        return [], []
    level = 2.0 / eps
    t = np.linspace(0.0, 1.0, grid + 1)
    fa = frenet_arrays(curve, t, check=False)
    a = np.abs(fa.eta_prime)
    a = np.where(np.isfinite(a), a, 0.0)
    if np.max(a) < 0.5 * level:
        return [], []

    def h(x):
        v = _eta_prime_at(curve, x)
        return abs(v) - level if math.isfinite(v) else -level

    hv = a - level
    above = hv >= 0
    points = []
    for i in np.nonzero(above[:-1] != above[1:])[0]:
        lo, hi = t[i], t[i + 1]
        points.append(lo if hv[i] == 0.0 else hi if hv[i + 1] == 0.0 else brentq(h, lo, hi, xtol=1e-15))
    # peaks that poke above the level strictly between grid points
    touches = []
    for i in range(grid + 1):
        left = hv[i - 1] if i > 0 else -np.inf
        right = hv[i + 1] if i < grid else -np.inf
        if above[i] or hv[i] < left or hv[i] < right or hv[i] < -0.05 * level:
            continue
        a0, b0 = t[max(i - 1, 0)], t[min(i + 1, grid)]
        res = minimize_scalar(lambda x: -h(x), bounds=(a0, b0), method="bounded", options={"xatol": 1e-15})
        peak, xm = -float(res.fun), float(res.x)
        if peak > 1e-12 * level:
            points.append(brentq(h, a0, xm, xtol=1e-15) if h(a0) < 0 else a0)
            points.append(brentq(h, xm, b0, xtol=1e-15) if h(b0) < 0 else b0)
        elif peak >= -1e-12 * level:
            touches.append(xm)
    pts = sorted(points)
    if above[0]:
        pts = [0.0] + pts
    if len(pts) % 2:
        pts.append(1.0)
    intervals = [(pts[k], pts[k + 1]) for k in range(0, len(pts), 2) if pts[k + 1] > pts[k]]
    return intervals, touches


def _interval_measure(curve: CurveSpec, intervals) -> float:
    """Arclength fraction covered by parameter intervals."""
    from .curves import curve_length

    total = curve_length(curve)
    q = QuadratureScheme(4, 16)
    covered = 0.0
    for lo, hi in intervals:
        t, w = q.nodes(lo, hi)
        covered += float(np.dot(w, np.linalg.norm(curve.derivatives(t, 1)[1], axis=-1)))
    return covered / total


# ---------------------------------------------------------------------------
# energies


def _node_geometry(curve: CurveSpec, quad: QuadratureScheme, breakpoints=(), check: bool = True):
    t, w = quad.nodes(breakpoints=tuple(breakpoints))
    return frenet_arrays(curve, t, check=check), w


def sadowsky_energy(curve: CurveSpec, quad: QuadratureScheme = DEFAULT_QUAD, breakpoints=()) -> EnergyValue:
    """``F = int kappa^2 (1 + eta^2)^2 ds``.

    ``breakpoints`` split quadrature panels, e.g. at isolated inflection
    points where the integrand is bounded but the frame degenerates.
    """
    fa, w = _node_geometry(curve, quad, breakpoints)
    return EnergyValue.finite(np.dot(w, sadowsky_integrand(fa) * fa.speed))


def wunderlich_energy(curve: CurveSpec, eps: float, quad: QuadratureScheme = DEFAULT_QUAD,
                      breakpoints=(), grid: int = DIAGNOSTIC_GRID) -> EnergyValue:
    """``F_eps = int kappa^2 (1 + eta^2)^2 g(eps eta') ds``, possibly +inf."""
    if eps < 0:
        raise DomainError("eps must be >= 0", eps=eps)
    fa, w = _node_geometry(curve, quad, breakpoints)
    base = sadowsky_integrand(fa) * fa.speed
    if eps == 0:
        return EnergyValue.finite(np.dot(w, base))
    intervals, touches = blowup_set(curve, eps, grid)
    if intervals:
        measure = _interval_measure(curve, intervals)
        if measure > 0:
            return EnergyValue.infinite(measure, intervals[0][0])
    g = eval_g(eps * fa.eta_prime)
    warning = None
    hit = ~np.isfinite(g)
    if np.any(hit) or touches:
        # |eps eta'| reaches 2 only on a null set: those nodes carry no mass
        where = sorted(set(touches) | set(fa.t_param[hit].tolist()))
        warning = "|eps*eta'| reaches 2 on a null set at t=" + ", ".join(f"{x:.6g}" for x in where)
        logger.warning(warning)
        g = np.where(hit, 0.0, g)
    return EnergyValue.finite(np.dot(w, base * g), warning)


def regularized_integrand(fa: FrenetSample, kappa_m: float) -> np.ndarray:
    """Curvature-floored Sadowsky integrand in arclength-normalized derivatives.

    With ``u`` the unit-speed curve, ``|u''| = kappa`` and
    ``u'.(u'' x u''') = kappa^2 tau = T / |c'|^6`` (T the parametric triple product).
    """
    kappa = np.asarray(fa.kappa)
    triple_s = np.asarray(fa.triple) / np.asarray(fa.speed) ** 6
    with np.errstate(divide="ignore", invalid="ignore"):
        regular = kappa**2 * (1.0 + triple_s**2 / kappa**6) ** 2
    floored = kappa_m**2 * (1.0 + triple_s**2 / kappa_m**6) ** 2
    return np.where(kappa >= kappa_m, regular, floored)


def kappa_level_crossings(curve: CurveSpec, level: float, grid: int = DIAGNOSTIC_GRID) -> list[float]:
    """Parameters where the curvature crosses ``level`` (grid bracketing + Brent)."""
    t = np.linspace(0.0, 1.0, grid + 1)
    d = curve.derivatives(t, 2)
    k = np.linalg.norm(np.cross(d[1], d[2]), axis=-1) / np.linalg.norm(d[1], axis=-1) ** 3
    h = k - level

    def fk(x):
        dd = curve.derivatives(np.array([x]), 2)
        return float(np.linalg.norm(np.cross(dd[1][0], dd[2][0])) / np.linalg.norm(dd[1][0]) ** 3) - level

    out = []
    for i in np.nonzero(np.sign(h[:-1]) * np.sign(h[1:]) < 0)[0]:
        out.append(brentq(fk, t[i], t[i + 1], xtol=1e-15))
    return out


def graded_breakpoints(points, levels: int = 40) -> list[float]:
    """Breakpoints accumulating geometrically at each of ``points`` (spacing 2^-k)."""
    out = []
    for z in points:
        if 0.0 < z < 1.0:
            out.append(z)
        for k in range(2, levels):
            for x in (z - 2.0**-k, z + 2.0**-k):
                if 0.0 < x < 1.0:
                    out.append(x)
    return sorted(set(out))


def regularized_sadowsky_energy(curve: CurveSpec, kappa_m: float, quad: QuadratureScheme = DEFAULT_QUAD,
                                breakpoints=()) -> EnergyValue:
    """Integral of the curvature-floored integrand; finite for every smooth curve.

    Panels are split where the curvature crosses ``kappa_m`` (the integrand
    has a kink there) and graded geometrically toward each entry of
    ``breakpoints`` (typically curvature zeros, near which the integrand
    can be sharply peaked).
    """
    if not kappa_m > 0:
        raise DomainError("kappa_m must be positive", kappa_m=kappa_m)
    points = list(breakpoints)
    if curve.closure:
        points += [z + 1.0 for z in breakpoints] + [z - 1.0 for z in breakpoints]
    extra = graded_breakpoints(points) + kappa_level_crossings(curve, kappa_m)
    fa, w = _node_geometry(curve, quad, extra, check=False)
    return EnergyValue.finite(np.dot(w, regularized_integrand(fa, kappa_m) * fa.speed))


def gamma_gap_prediction(curve: CurveSpec, quad: QuadratureScheme = DEFAULT_QUAD) -> float:
    """Leading coefficient P in ``F_eps - F = P eps^2 + O(eps^4)``.

    From ``g(x) = 1 + x^2/12 + ...``: ``P = (1/12) int kappa^2 (1+eta^2)^2 eta'^2 ds``.
    """
    fa, w = _node_geometry(curve, quad)
    return float(np.dot(w, sadowsky_integrand(fa) * fa.eta_prime**2 * fa.speed) / 12.0)


def dimensional_energy(F_eps: float, D: float, w: float, ell: float) -> float:
    """Physical bending energy ``E = D w F_eps / ell`` of a ribbon of width 2w and length ell."""
    for name, val in (("D", D), ("w", w), ("ell", ell)):
        if not val > 0:
            raise DomainError(f"{name} must be positive", **{name: val})
    if F_eps < 0:
        raise DomainError("F_eps must be >= 0", F_eps=F_eps)
    return D * w * F_eps / ell


def node_table(curve: CurveSpec, eps: float, quad: QuadratureScheme = DEFAULT_QUAD) -> dict:
    """Per-node columns for the CSV dump."""
    from .curves import arclength

    fa, _ = _node_geometry(curve, quad)
    sad = sadowsky_integrand(fa)
    return {
        "t": fa.t_param,
        "s": arclength(curve, fa.t_param),
        "kappa": fa.kappa,
        "tau": fa.tau,
        "eta": fa.eta,
        "eta_prime": fa.eta_prime,
        "sadowsky_integrand": sad,
        "wunderlich_integrand": sad * eval_g(eps * fa.eta_prime),
    }
