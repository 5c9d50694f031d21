"""Smooth centerlines in a global analytic basis and their Frenet-level geometry.

Two bases are supported:

* ``chebyshev_open``: each component is a Chebyshev series in ``x = 2t - 1``.
* ``fourier_closed``: each component is ``a0 + sum_k a_k cos(2 pi k t) + b_k sin(2 pi k t)``,
  stored as columns ``[a0, a1, b1, a2, b2, ...]``.

Derivatives up to order four are exact for the basis, which is what the
arclength derivative of eta needs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numpy.polynomial import chebyshev as cheb
from scipy.fft import dct
from scipy.interpolate import PchipInterpolator

from .errors import DegenerateCurve, DomainError, InflectionPoint
from .quadrature import QuadratureScheme

CHEBYSHEV_OPEN = "chebyshev_open"
FOURIER_CLOSED = "fourier_closed"
BASIS_KINDS = (CHEBYSHEV_OPEN, FOURIER_CLOSED)

KAPPA_FLOOR_EVAL = 1e-10
_LENGTH_QUAD = QuadratureScheme(64, 16)


@dataclass(frozen=True)
class BoundaryData:
    """Clamped end data: positions and unit tangents at t = 0 and t = 1."""

    start: np.ndarray
    start_tangent: np.ndarray
    end: np.ndarray
    end_tangent: np.ndarray

    def __post_init__(self):
        for name in ("start", "start_tangent", "end", "end_tangent"):
            arr = np.array(getattr(self, name), dtype=float).reshape(3)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        for name in ("start_tangent", "end_tangent"):
            norm = np.linalg.norm(getattr(self, name))
            if abs(norm - 1.0) > 1e-12:
                raise DomainError(f"{name} must have unit norm (got {norm!r})", field=name)

    def to_dict(self) -> dict:
        return {
            "start": self.start.tolist(),
            "start_tangent": self.start_tangent.tolist(),
            "end": self.end.tolist(),
            "end_tangent": self.end_tangent.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "BoundaryData":
        return cls(data["start"], data["start_tangent"], data["end"], data["end_tangent"])


@dataclass(frozen=True, eq=False)
class CurveSpec:
    basis_kind: str
    coefficients: np.ndarray
    boundary_data: BoundaryData | None = None
    target_length: float = 1.0

    def __post_init__(self):
        if self.basis_kind not in BASIS_KINDS:
            raise DomainError(f"unknown basis_kind {self.basis_kind!r}", basis_kind=self.basis_kind)
        coef = np.array(self.coefficients, dtype=float)
        if coef.ndim != 2 or coef.shape[0] != 3:
            raise DomainError(f"coefficients must have shape (3, N), got {coef.shape}")
        n = coef.shape[1]
        if n < 8:
            raise DomainError(f"need at least 8 coefficients per component, got {n}")
        if self.basis_kind == FOURIER_CLOSED and n % 2 == 0:
            raise DomainError("fourier_closed needs an odd coefficient count 2K+1")
        if self.boundary_data is not None and self.basis_kind == FOURIER_CLOSED:
            raise DomainError("closed curves take no boundary data")
        if not np.all(np.isfinite(coef)):
            raise DomainError("coefficients must be finite")
        if not self.target_length > 0:
            raise DomainError("target_length must be positive")
        coef.setflags(write=False)
        object.__setattr__(self, "coefficients", coef)
        object.__setattr__(self, "target_length", float(self.target_length))

    @property
    def closure(self) -> bool:
        return self.basis_kind == FOURIER_CLOSED

    @property
    def n(self) -> int:
        return self.coefficients.shape[1]

    def __call__(self, t):
        return evaluate_derivatives(self, t, order=0)[0]

    def derivatives(self, t, order: int = 4) -> np.ndarray:
        """Array of shape ``(order + 1, len(t), 3)``; no domain check."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        basis = basis_matrices(self.basis_kind, self.n, t, order)
        return basis @ self.coefficients.T

    def with_coefficients(self, coefficients) -> "CurveSpec":
        return CurveSpec(self.basis_kind, coefficients, self.boundary_data, self.target_length)

    def transformed(self, rotation=None, translation=None) -> "CurveSpec":
        """Apply ``x -> R x + d`` to the curve (and its boundary data)."""
        rot = np.eye(3) if rotation is None else np.asarray(rotation, dtype=float)
        shift = np.zeros(3) if translation is None else np.asarray(translation, dtype=float)
        coef = rot @ self.coefficients
        # column 0 is the constant mode in both bases
        coef[:, 0] += shift
        bd = self.boundary_data
        if bd is not None:
            bd = BoundaryData(rot @ bd.start + shift, rot @ bd.start_tangent, rot @ bd.end + shift, rot @ bd.end_tangent)
        return CurveSpec(self.basis_kind, coef, bd, self.target_length)

    def scaled(self, factor: float) -> "CurveSpec":
        bd = self.boundary_data
        if bd is not None:
            bd = BoundaryData(factor * bd.start, bd.start_tangent, factor * bd.end, bd.end_tangent)
        return CurveSpec(self.basis_kind, factor * self.coefficients, bd, self.target_length * factor)

    def to_dict(self) -> dict:
        out = {
            "basis_kind": self.basis_kind,
            "closure": self.closure,
            "coefficients": self.coefficients.tolist(),
            "target_length": self.target_length,
        }
        if self.boundary_data is not None:
            out["boundary_data"] = self.boundary_data.to_dict()
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "CurveSpec":
        known = {"basis_kind", "closure", "coefficients", "target_length", "boundary_data"}
        unknown = set(data) - known
        if unknown:
            raise DomainError(f"unknown curve keys: {sorted(unknown)}")
        bd = data.get("boundary_data")
        curve = cls(
            data["basis_kind"],
            np.array(data["coefficients"], dtype=float),
            None if bd is None else BoundaryData.from_dict(bd),
            float(data.get("target_length", 1.0)),
        )
        if "closure" in data and bool(data["closure"]) != curve.closure:
            raise DomainError("closure flag disagrees with basis_kind")
        return curve


@dataclass(frozen=True)
class FrenetSample:
    """Pointwise geometry; fields are scalars or arrays of equal length."""

    t_param: float | np.ndarray
    arclength_s: float | np.ndarray | None
    position: np.ndarray
    d1: np.ndarray
    d2: np.ndarray
    d3: np.ndarray
    d4: np.ndarray
    speed: float | np.ndarray
    kappa: float | np.ndarray
    tau: float | np.ndarray
    eta: float | np.ndarray
    eta_prime: float | np.ndarray
    triple: float | np.ndarray = field(repr=False, default=None)


@dataclass(frozen=True)
class ConstraintSet:
    kappa_min: float = 0.0
    unit_speed_tol: float = 1e-4
    bc_mode: str = "free"

    def __post_init__(self):
        if self.kappa_min < 0:
            raise DomainError("kappa_min must be >= 0")
        if not 0 < self.unit_speed_tol <= 1e-3:
            raise DomainError("unit_speed_tol must lie in (0, 1e-3]")
        if self.bc_mode not in ("clamped", "free", "periodic"):
            raise DomainError(f"unknown bc_mode {self.bc_mode!r}")


# ---------------------------------------------------------------------------
# basis evaluation


def basis_matrices(kind: str, n: int, t: np.ndarray, order: int) -> np.ndarray:
    """Basis values and t-derivatives, shape ``(order + 1, len(t), n)``."""
    t = np.ascontiguousarray(t, dtype=float)
    return _basis_cached(kind, n, order, t.tobytes())


@lru_cache(maxsize=128)
def _basis_cached(kind: str, n: int, order: int, t_bytes: bytes) -> np.ndarray:
    t = np.frombuffer(t_bytes, dtype=float)
    out = np.empty((order + 1, t.size, n))
    if kind == CHEBYSHEV_OPEN:
        x = 2.0 * t - 1.0
        eye = np.eye(n)
        for d in range(order + 1):
            if d >= n:
                out[d] = 0.0
                continue
            dcoef = cheb.chebder(eye, d) * 2.0**d  # (n - d, n)
            out[d] = cheb.chebvander(x, n - 1 - d) @ dcoef
    else:
        k = np.arange(1, (n - 1) // 2 + 1)
        omega = 2.0 * np.pi * k
        phase = np.outer(t, omega)
        for d in range(order + 1):
            shift = d * np.pi / 2.0
            scale = omega**d
            out[d, :, 0] = 1.0 if d == 0 else 0.0
            out[d, :, 1::2] = scale * np.cos(phase + shift)
            out[d, :, 2::2] = scale * np.sin(phase + shift)
    out.setflags(write=False)
    return out


def evaluate_derivatives(curve: CurveSpec, t, order: int = 4):
    """Position and parametric derivatives of orders 1..order at ``t``.

    Returns a tuple ``(position, d1, ..., d_order)``; each entry has shape
    ``(3,)`` for scalar ``t`` and ``(m, 3)`` for an array of length m.
    """
    scalar = np.ndim(t) == 0
    tt = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(tt < 0.0) or np.any(tt > 1.0) or not np.all(np.isfinite(tt)):
        bad = tt[(tt < 0.0) | (tt > 1.0) | ~np.isfinite(tt)][0]
        raise DomainError(f"t={bad!r} outside [0, 1]", t=float(bad))
    d = curve.derivatives(tt, order)
    if scalar:
        return tuple(d[k, 0] for k in range(order + 1))
    return tuple(d[k] for k in range(order + 1))


# ---------------------------------------------------------------------------
# Frenet quantities


def _dot(a, b):
    return np.einsum("...i,...i->...", a, b)


def frenet_from_derivatives(d: np.ndarray):
    """Geometric scalars from stacked derivatives ``d`` of shape (5, m, 3).

    Returns (speed, |c' x c''|, kappa, tau, eta, eta_prime, triple).  Entries
    where the curvature vanishes come back as nan/inf; callers decide.
    """
    d1, d2, d3, d4 = d[1], d[2], d[3], d[4]
    speed = np.sqrt(_dot(d1, d1))
    cr = np.cross(d1, d2)
    p2 = _dot(cr, cr)
    p = np.sqrt(p2)
    triple = _dot(d1, np.cross(d2, d3))
    with np.errstate(divide="ignore", invalid="ignore"):
        kappa = p / speed**3
        tau = triple / p2
        s3 = speed**3
        p3 = p2 * p
        eta = triple * s3 / p3
        triple4 = _dot(d1, np.cross(d2, d4))
        dspeed = _dot(d1, d2) / speed
        dp = _dot(cr, np.cross(d1, d3)) / p
        deta = (triple4 * s3 + 3.0 * triple * speed**2 * dspeed) / p3 - 3.0 * triple * s3 * dp / (p3 * p)
        eta_prime = deta / speed
    return speed, p, kappa, tau, eta, eta_prime, triple


def frenet_arrays(curve: CurveSpec, t, kappa_floor: float = KAPPA_FLOOR_EVAL, check: bool = True):
    """Vectorized Frenet data at parameters ``t`` (no arclength).

    With ``check`` the first node whose curvature is below ``kappa_floor``
    raises :class:`InflectionPoint`.
    """
    tt = np.atleast_1d(np.asarray(t, dtype=float))
    d = curve.derivatives(tt, 4)
    speed, _, kappa, tau, eta, eta_prime, triple = frenet_from_derivatives(d)
    if np.any(speed <= 0.0):
        i = int(np.argmax(speed <= 0.0))
        raise DegenerateCurve(f"speed vanishes at t={tt[i]:.17g}", t=float(tt[i]))
    if check:
        bad = ~(kappa >= kappa_floor)
        if np.any(bad):
            i = int(np.argmax(bad))
            raise InflectionPoint(tt[i], float(kappa[i]))
    return FrenetSample(tt, None, d[0], d[1], d[2], d[3], d[4], speed, kappa, tau, eta, eta_prime, triple)


def frenet_sample(curve: CurveSpec, t, kappa_floor: float = KAPPA_FLOOR_EVAL) -> FrenetSample:
    """Frenet data at scalar or array ``t``, including arclength from t = 0."""
    scalar = np.ndim(t) == 0
    evaluate_derivatives(curve, t, order=0)  # domain check
    fa = frenet_arrays(curve, t, kappa_floor)
    s = arclength(curve, fa.t_param)
    if scalar:
        return FrenetSample(
            float(fa.t_param[0]), float(s[0]), fa.position[0], fa.d1[0], fa.d2[0], fa.d3[0], fa.d4[0],
            float(fa.speed[0]), float(fa.kappa[0]), float(fa.tau[0]), float(fa.eta[0]),
            float(fa.eta_prime[0]), float(fa.triple[0]),
        )
    return FrenetSample(fa.t_param, s, fa.position, fa.d1, fa.d2, fa.d3, fa.d4, fa.speed,
                        fa.kappa, fa.tau, fa.eta, fa.eta_prime, fa.triple)


def frame(curve: CurveSpec, t, kappa_floor: float = KAPPA_FLOOR_EVAL):
    """Unit tangent, principal normal and binormal at ``t`` (arrays (m, 3))."""
    tt = np.atleast_1d(np.asarray(t, dtype=float))
    d = curve.derivatives(tt, 2)
    cr = np.cross(d[1], d[2])
    p = np.linalg.norm(cr, axis=-1)
    speed = np.linalg.norm(d[1], axis=-1)
    bad = ~(p / speed**3 >= kappa_floor)
    if np.any(bad):
        i = int(np.argmax(bad))
        raise InflectionPoint(tt[i], float(p[i] / speed[i] ** 3))
    tangent = d[1] / speed[:, None]
    binormal = cr / p[:, None]
    normal = np.cross(binormal, tangent)
    return tangent, normal, binormal


# ---------------------------------------------------------------------------
# length and arclength


def speed(curve: CurveSpec, t) -> np.ndarray:
    d = curve.derivatives(np.atleast_1d(t), 1)
    return np.linalg.norm(d[1], axis=-1)


def curve_length(curve: CurveSpec, quad: QuadratureScheme = _LENGTH_QUAD) -> float:
    t, w = quad.nodes()
    return float(np.dot(w, speed(curve, t)))


def arclength(curve: CurveSpec, t) -> np.ndarray:
    """Arclength from 0 to each entry of ``t`` by Gauss-Legendre on [0, t]."""
    tt = np.atleast_1d(np.asarray(t, dtype=float))
    x, w = QuadratureScheme(8, 16).nodes()
    nodes = np.outer(tt, x).ravel()
    sp = speed(curve, nodes).reshape(tt.size, -1)
    return tt * (sp @ w)


def normalized_length(curve: CurveSpec, length: float = 1.0) -> CurveSpec:
    """Rescale the curve about the origin so that its length equals ``length``."""
    out = curve.scaled(length / curve_length(curve))
    return CurveSpec(out.basis_kind, out.coefficients, out.boundary_data, length)


class _ArclengthMap:
    """Cumulative arclength table with exact in-panel evaluation."""

    def __init__(self, curve: CurveSpec, panels: int = 256, order: int = 16):
        self.curve = curve
        self.edges = np.linspace(0.0, 1.0, panels + 1)
        x, w = np.polynomial.legendre.leggauss(order)
        self._x, self._w = x, w
        t, wt = QuadratureScheme(panels, order).nodes()
        sp = speed(curve, t)
        if np.any(sp <= 0.0):
            raise DegenerateCurve("speed vanishes on the arclength grid")
        per_panel = (wt * sp).reshape(panels, order).sum(axis=1)
        self.cumulative = np.concatenate([[0.0], np.cumsum(per_panel)])
        self.length = float(self.cumulative[-1])

    def __call__(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        k = np.clip(np.searchsorted(self.edges, t, side="right") - 1, 0, len(self.edges) - 2)
        a = self.edges[k]
        half = 0.5 * (t - a)
        nodes = a[:, None] + half[:, None] * (self._x + 1.0)
        sp = speed(self.curve, nodes.ravel()).reshape(nodes.shape)
        return self.cumulative[k] + half * (sp @ self._w)

    def inverse(self, s: np.ndarray) -> np.ndarray:
        # monotone interpolation for the start, Newton polish on the exact map
        guess = PchipInterpolator(self.cumulative, self.edges)(s)
        t = np.clip(guess, 0.0, 1.0)
        for _ in range(8):
            r = self(t) - s
            step = r / speed(self.curve, t)
            t = np.clip(t - step, 0.0, 1.0)
            if np.max(np.abs(step)) < 1e-15:
                break
        return t


def reparameterize_arclength(curve: CurveSpec, samples: int | None = None, tol: float = 1e-10) -> CurveSpec:
    """Refit ``curve`` in its own basis with constant parametric speed.

    The output satisfies ``|c'(u)| = L`` (L the total length) to within the
    truncation of the refit.  With ``samples=None`` the coefficient count is
    doubled until the speed deviation on a check grid is below ``tol * L``.
    """
    dense = speed(curve, np.linspace(0.0, 1.0, 4097))
    if np.min(dense) <= 1e-12 * np.max(dense):
        i = int(np.argmin(dense))
        raise DegenerateCurve(f"speed vanishes near t={i / 4096:.6g}", t=i / 4096)
    amap = _ArclengthMap(curve)
    L = amap.length
    if samples is not None:
        return _refit_constant_speed(curve, amap, int(samples))
    n = max(2 * curve.n + 1, 33)
    check = np.linspace(0.0, 1.0, 2001)
    while True:
        out = _refit_constant_speed(curve, amap, n)
        dev = np.max(np.abs(speed(out, check) - L))
        if dev <= tol * L or n > 1024:
            return out
        n = 2 * n + 1


def _refit_constant_speed(curve: CurveSpec, amap: _ArclengthMap, n: int) -> CurveSpec:
    L = amap.length
    if curve.basis_kind == FOURIER_CLOSED:
        n += 1 - n % 2
        u = np.arange(n) / n
        t = amap.inverse(u * L)
        t[0] = 0.0
        coef = fourier_coefficients(curve(t).T, n)
    else:
        u = chebyshev_nodes(n)
        t = amap.inverse(u * L)
        coef = chebyshev_coefficients(curve(t).T, n)
    bd = curve.boundary_data
    return CurveSpec(curve.basis_kind, coef, bd, curve.target_length)


# ---------------------------------------------------------------------------
# fitting helpers


def chebyshev_nodes(n: int) -> np.ndarray:
    """First-kind Chebyshev points mapped to [0, 1], increasing."""
    x = np.cos(np.pi * (np.arange(n)[::-1] + 0.5) / n)
    return 0.5 * (x + 1.0)


def chebyshev_coefficients(values: np.ndarray, n: int) -> np.ndarray:
    """Interpolation coefficients from values at :func:`chebyshev_nodes` (via DCT-II)."""
    values = np.atleast_2d(np.asarray(values, dtype=float))
    coef = dct(values[:, ::-1], type=2, axis=-1) / n
    coef[:, 0] *= 0.5
    return coef


def fourier_coefficients(values: np.ndarray, n: int) -> np.ndarray:
    """Trig interpolation coefficients from values at ``arange(n)/n`` (n odd)."""
    values = np.atleast_2d(values)
    spec = np.fft.rfft(values, axis=-1) / n
    K = (n - 1) // 2
    coef = np.empty((values.shape[0], n))
    coef[:, 0] = spec[:, 0].real
    coef[:, 1::2] = 2.0 * spec[:, 1 : K + 1].real
    coef[:, 2::2] = -2.0 * spec[:, 1 : K + 1].imag
    return coef


def fit_curve(fn, basis_kind: str, n: int, boundary_data=None, target_length: float = 1.0,
              chop: float = 1e-14) -> CurveSpec:
    """Interpolate a vectorized function ``fn(t) -> (m, 3)`` in the given basis.

    Trailing modes below ``chop`` times the largest coefficient are zeroed:
    their rounding noise would otherwise be amplified by roughly n**8 in the
    fourth derivative.
    """
    if basis_kind == FOURIER_CLOSED:
        n += 1 - n % 2
        t = np.arange(n) / n
        coef = fourier_coefficients(np.asarray(fn(t)).T, n)
    else:
        t = chebyshev_nodes(n)
        coef = chebyshev_coefficients(np.asarray(fn(t)).T, n)
    if chop:
        coef = chop_tail(coef, chop, basis_kind)
    return CurveSpec(basis_kind, coef, boundary_data, target_length)


def chop_tail(coef: np.ndarray, rel: float, basis_kind: str = CHEBYSHEV_OPEN) -> np.ndarray:
    """Zero the trailing modes whose magnitude is below ``rel * max|coef|``."""
    coef = np.array(coef, dtype=float)
    threshold = rel * np.max(np.abs(coef))
    for row in coef:
        mag = np.abs(row)
        if basis_kind == FOURIER_CLOSED:
            # cos/sin columns of one frequency are kept or dropped together
            pair = np.maximum(mag[1::2], mag[2::2])
            mag = np.concatenate([mag[:1], np.repeat(pair, 2)])
        keep = np.nonzero(mag > threshold)[0]
        row[(keep[-1] + 1 if keep.size else 0):] = 0.0
    return coef


# ---------------------------------------------------------------------------
# diagnostics


def constraint_report(curve: CurveSpec, constraints: ConstraintSet, grid: int = 256) -> dict:
    """Membership diagnostics for the admissible set: speed, curvature floor, end data."""
    if grid < 16:
        raise DomainError("grid must be >= 16", grid=grid)
    t = np.linspace(0.0, 1.0, grid)
    d = curve.derivatives(t, 2)
    sp = np.linalg.norm(d[1], axis=-1)
    kappa = np.linalg.norm(np.cross(d[1], d[2]), axis=-1) / sp**3
    speed_dev = float(np.max(np.abs(sp - curve.target_length)))
    report = {
        "max_speed_deviation": speed_dev,
        "min_kappa": float(np.min(kappa)),
        "argmin_kappa_t": float(t[int(np.argmin(kappa))]),
        "speed_ok": speed_dev <= constraints.unit_speed_tol,
        "kappa_ok": bool(np.min(kappa) >= constraints.kappa_min),
    }
    residuals = boundary_residuals(curve)
    report["bc_residuals"] = residuals
    if constraints.bc_mode == "clamped":
        report["bc_ok"] = bool(residuals and max(residuals.values()) <= 1e-8)
    elif constraints.bc_mode == "periodic":
        gap = float(np.linalg.norm(d[0][0] - d[0][-1]))
        report["bc_residuals"] = {"closure_gap": gap}
        report["bc_ok"] = gap <= 1e-8
    else:
        report["bc_ok"] = True
    return report


def boundary_residuals(curve: CurveSpec) -> dict:
    bd = curve.boundary_data
    if bd is None:
        return {}
    d = curve.derivatives(np.array([0.0, 1.0]), 1)
    t0 = d[1][0] / np.linalg.norm(d[1][0])
    t1 = d[1][1] / np.linalg.norm(d[1][1])
    return {
        "start_position": float(np.linalg.norm(d[0][0] - bd.start)),
        "start_tangent": float(np.linalg.norm(t0 - bd.start_tangent)),
        "end_position": float(np.linalg.norm(d[0][1] - bd.end)),
        "end_tangent": float(np.linalg.norm(t1 - bd.end_tangent)),
    }


def clamped_constraint_matrix(n: int) -> np.ndarray:
    """Rows map Chebyshev coefficients to c(0), c(1), c'(0), c'(1)."""
    ends = np.array([-1.0, 1.0])
    vals = cheb.chebvander(ends, n - 1)
    ders = cheb.chebvander(ends, n - 2) @ cheb.chebder(np.eye(n)) * 2.0
    return np.vstack([vals, ders])


def impose_boundary_data(curve: CurveSpec, boundary_data: BoundaryData | None = None) -> CurveSpec:
    """Smallest coefficient change making the curve satisfy clamped end data.

    The end tangents are imposed with magnitude ``target_length`` so that a
    constant-speed parameterization of a curve of that length is feasible.
    """
    bd = boundary_data or curve.boundary_data
    if bd is None:
        return curve
    if curve.basis_kind != CHEBYSHEV_OPEN:
        raise DomainError("boundary data requires the chebyshev_open basis")
    C = clamped_constraint_matrix(curve.n)
    L = curve.target_length
    rhs = np.stack([bd.start, bd.end, L * bd.start_tangent, L * bd.end_tangent])  # (4, 3)
    coef = curve.coefficients.copy()
    resid = rhs - C @ coef.T
    coef += np.linalg.lstsq(C, resid, rcond=None)[0].T
    return CurveSpec(curve.basis_kind, coef, bd, curve.target_length)


def locate_curvature_zeros(curve: CurveSpec, grid: int = 4096, tol: float = 1e-8) -> list[float]:
    """Parameters where |c' x c''| (relative to speed^3) has an isolated zero."""
    from scipy.optimize import minimize_scalar

    t = np.linspace(0.0, 1.0, grid + 1)
    d = curve.derivatives(t, 2)
    sp = np.linalg.norm(d[1], axis=-1)
    k = np.linalg.norm(np.cross(d[1], d[2]), axis=-1) / sp**3
    scale = max(float(np.max(k)), 1.0)
    zeros = []
    for i in range(grid + 1):
        left = k[i - 1] if i > 0 else np.inf
        right = k[i + 1] if i < grid else np.inf
        # a zero keeps its grid neighbours far below the curvature scale
        if not (k[i] <= left and k[i] <= right) or k[i] > 1e-2 * scale:
            continue
        lo, hi = t[max(i - 1, 0)], t[min(i + 1, grid)]

        def kap(x):
            dd = curve.derivatives(np.array([x]), 2)
            return float(np.linalg.norm(np.cross(dd[1][0], dd[2][0])) / np.linalg.norm(dd[1][0]) ** 3)

        res = minimize_scalar(kap, bounds=(lo, hi), method="bounded", options={"xatol": 1e-14})
        if res.fun <= tol * scale:
            x = float(res.x)
            if not zeros or abs(x - zeros[-1]) > 2.0 / grid:
                zeros.append(x)
    if curve.closure and len(zeros) > 1 and zeros[0] < 2.0 / grid and zeros[-1] > 1 - 2.0 / grid:
        zeros.pop()
    return zeros


# ---------------------------------------------------------------------------
# standard shapes


def circle(length: float = 1.0, n: int = 9) -> CurveSpec:
    """Planar circle of the given length, traversed once at constant speed."""
    r = length / (2.0 * np.pi)
    coef = np.zeros((3, n))
    coef[0, 1] = r
    coef[1, 2] = r
    return CurveSpec(FOURIER_CLOSED, coef, target_length=length)


def ellipse(axis_ratio: float = 1.5, n: int = 9, length: float = 1.0) -> CurveSpec:
    coef = np.zeros((3, n))
    coef[0, 1] = axis_ratio
    coef[1, 2] = 1.0
    return normalized_length(CurveSpec(FOURIER_CLOSED, coef), length)


def segment(n: int = 8, length: float = 1.0) -> CurveSpec:
    coef = np.zeros((3, n))
    coef[0, 0] = 0.5 * length
    coef[0, 1] = 0.5 * length
    return CurveSpec(CHEBYSHEV_OPEN, coef, target_length=length)


def helix(radius: float, pitch: float, length: float = 1.0, n: int = 40) -> CurveSpec:
    """Open helix ``(a cos th, a sin th, b th)`` with unit-speed sampling, fitted in Chebyshev."""
    c = np.hypot(radius, pitch)

    def fn(t):
        th = t * length / c
        return np.stack([radius * np.cos(th), radius * np.sin(th), pitch * th], axis=-1)

    return fit_curve(fn, CHEBYSHEV_OPEN, n, target_length=length)


def torsion_modulated(mode: int = 2, height: float = 0.05, wobble: float = 0.02, n: int | None = None,
                      length: float = 1.0) -> CurveSpec:
    """Closed wavy loop ((1 + w cos m th) cos th, (1 + w cos m th) sin th, h sin m th), unit length.

    Torsion and eta' are non-constant, so the Wunderlich and Sadowsky
    energies differ at order eps^2.  Planar curvature stays positive while
    ``wobble * (mode**2 + 1) < 1``.
    """
    if wobble * (mode**2 + 1) >= 1.0:
        raise DomainError("wobble too large: the planar projection develops inflections")
    K = max(mode + 1, 4)
    coef = np.zeros((3, 2 * K + 1 if n is None else n))
    coef[0, 1] = 1.0
    coef[1, 2] = 1.0
    # (1 + w cos m th) cos th = cos th + w/2 [cos (m+1) th + cos (m-1) th]
    for k, sin_sign in ((mode + 1, 1.0), (mode - 1, -1.0)):
        if k == 0:
            continue
        coef[0, 2 * k - 1] += 0.5 * wobble
        coef[1, 2 * k] += 0.5 * wobble * sin_sign
    coef[2, 2 * mode] = height
    return normalized_length(CurveSpec(FOURIER_CLOSED, coef), length)


def random_closed_curve(rng: np.random.Generator, modes: int = 3, amplitude: float = 0.08,
                        n: int = 9, min_kappa: float = 0.5, length: float = 1.0) -> CurveSpec:
    """Circle plus random low Fourier modes in all components, rejected until kappa > min_kappa."""
    if n < 2 * modes + 1:
        raise DomainError("n too small for requested modes")
    check = np.linspace(0.0, 1.0, 1024, endpoint=False)
    for _ in range(1000):
        coef = np.zeros((3, n))
        coef[0, 1] = 1.0
        coef[1, 2] = 1.0
        for k in range(1, modes + 1):
            scale = amplitude / k**2
            coef[:, 2 * k - 1 : 2 * k + 1] += scale * rng.standard_normal((3, 2))
        curve = normalized_length(CurveSpec(FOURIER_CLOSED, coef), length)
        d = curve.derivatives(check, 2)
        sp = np.linalg.norm(d[1], axis=-1)
        kap = np.linalg.norm(np.cross(d[1], d[2]), axis=-1) / sp**3
        if np.min(kap) > min_kappa:
            return curve
    raise DegenerateCurve("could not draw an admissible random curve")
