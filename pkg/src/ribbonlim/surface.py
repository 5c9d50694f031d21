"""Rectifying developable of a centerline and its 2D bending energy.

The ribbon is ``x(t, v) = r(t) + v (b + eta T)`` with ``T`` the unit tangent,
``b`` the binormal and ``v`` the (nondimensional) width coordinate.  In
arclength the tangent derivative is ``x_s = (1 + v eta') T`` and the area
element is ``|1 + v eta'| dv ds``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .curves import CurveSpec, FrenetSample, frame, frenet_arrays
from .energy import EnergyValue, blowup_set, _interval_measure, sadowsky_energy
from .errors import DomainError, EdgeOfRegression
from .quadrature import DEFAULT_QUAD, QuadratureScheme

EDGE_TOL = 1e-12
WIDTH_QUAD = QuadratureScheme(2, 16)


@dataclass
class RibbonMesh:
    vertices: np.ndarray  # (n_s * n_v, 3), index i * n_v + j
    faces: np.ndarray  # (m, 3) zero-based
    per_vertex_kappa1: np.ndarray
    grid_shape: tuple[int, int]
    closed: bool = False

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_faces(self) -> int:
        return len(self.faces)


def ruling_direction(curve: CurveSpec, t) -> np.ndarray:
    """``b + eta T`` at parameters ``t``, shape (m, 3)."""
    tt = np.atleast_1d(np.asarray(t, dtype=float))
    fa = frenet_arrays(curve, tt)
    tangent, _, binormal = frame(curve, tt)
    return binormal + fa.eta[:, None] * tangent


def ruled_surface_point(curve: CurveSpec, t: float, v: float, half_width: float) -> np.ndarray:
    if not 0.0 <= t <= 1.0:
        raise DomainError(f"t={t!r} outside [0, 1]", t=t)
    if abs(v) > half_width:
        raise DomainError(f"|v|={abs(v)!r} exceeds half width {half_width!r}", v=v)
    r = curve(np.array([t]))[0]
    return r + v * ruling_direction(curve, t)[0]


def principal_curvature(sample: FrenetSample, v):
    """Nonzero principal curvature ``kappa (1 + eta^2) / |1 + v eta'|``."""
    denom = np.abs(1.0 + np.asarray(v) * np.asarray(sample.eta_prime))
    if np.any(denom < EDGE_TOL):
        t = np.broadcast_to(np.asarray(sample.t_param, dtype=float), np.shape(denom))
        vv = np.broadcast_to(np.asarray(v, dtype=float), np.shape(denom))
        i = np.unravel_index(int(np.argmax(denom < EDGE_TOL)), np.shape(denom)) if np.ndim(denom) else ()
        raise EdgeOfRegression(float(t[i]), float(vv[i]))
    return np.asarray(sample.kappa) * (1.0 + np.asarray(sample.eta) ** 2) / denom


def surface_energy(curve: CurveSpec, eps: float,
                   quad2d: tuple[QuadratureScheme, QuadratureScheme] = (DEFAULT_QUAD, WIDTH_QUAD)) -> EnergyValue:
    """Width-averaged 2D bending energy ``(1/eps) int int kappa1^2 dA`` over ``|v| <= eps/2``.

    The ``1/eps`` factor makes the result directly comparable with
    ``wunderlich_energy``; at ``eps = 0`` the centerline limit is returned.
    """
    if eps < 0:
        raise DomainError("eps must be >= 0", eps=eps)
    along, across = quad2d
    if eps == 0:
        return sadowsky_energy(curve, along)
    intervals, _ = blowup_set(curve, eps)
    if intervals:
        measure = _interval_measure(curve, intervals)
        if measure > 0:
            return EnergyValue.infinite(measure, intervals[0][0])
    t, wt = along.nodes()
    fa = frenet_arrays(curve, t)
    v, wv = across.nodes(-0.5 * eps, 0.5 * eps)
    area = np.abs(1.0 + np.outer(fa.eta_prime, v))
    ok = area >= EDGE_TOL
    warning = None
    if not np.all(ok):
        # the strip edge meets the edge of regression on a null set only
        i = int(np.argmax(~ok.all(axis=1)))
        warning = f"edge of regression touches the strip at t={t[i]:.6g}"
    safe = np.where(ok, area, 1.0)
    k1 = (fa.kappa * (1.0 + fa.eta**2))[:, None] / safe
    inner = np.where(ok, k1**2 * safe, 0.0) @ wv
    return EnergyValue.finite(np.dot(wt, inner * fa.speed) / eps, warning)


def build_mesh(curve: CurveSpec, eps: float, n_s: int, n_v: int) -> RibbonMesh:
    """Grid-sampled ribbon with per-vertex principal curvature.

    Closed curves wrap around the seam (``t = i / n_s``); open curves sample
    both ends (``t = i / (n_s - 1)``).  Each grid cell is split along the
    diagonal from its lower-left to its upper-right corner.
    """
    if n_s < 16 or n_v < 3:
        raise DomainError("mesh needs n_s >= 16 and n_v >= 3", n_s=n_s, n_v=n_v)
    if eps < 0:
        raise DomainError("eps must be >= 0", eps=eps)
    closed = curve.closure
    t = np.arange(n_s) / n_s if closed else np.linspace(0.0, 1.0, n_s)
    v = np.linspace(-0.5 * eps, 0.5 * eps, n_v)
    fa = frenet_arrays(curve, t)
    tangent, _, binormal = frame(curve, t)
    ruling = binormal + fa.eta[:, None] * tangent
    # 1 + v eta' changes sign across the edge of regression, so a
    # nonpositive value at any vertex means the rulings have crossed
    denom = 1.0 + np.outer(fa.eta_prime, v)
    if np.any(denom < EDGE_TOL):
        i, j = np.unravel_index(int(np.argmax(denom < EDGE_TOL)), denom.shape)
        raise EdgeOfRegression(float(t[i]), float(v[j]))
    verts = fa.position[:, None, :] + v[None, :, None] * ruling[:, None, :]
    k1 = (fa.kappa * (1.0 + fa.eta**2))[:, None] / denom

    cells_s = n_s if closed else n_s - 1
    i = np.repeat(np.arange(cells_s), n_v - 1)
    j = np.tile(np.arange(n_v - 1), cells_s)
    i1 = (i + 1) % n_s
    a, b = i * n_v + j, i1 * n_v + j  # lower-left, lower-right
    c, d = i1 * n_v + j + 1, i * n_v + j + 1  # upper-right, upper-left
    faces = np.empty((2 * len(i), 3), dtype=np.int64)
    faces[0::2] = np.stack([a, b, c], axis=1)
    faces[1::2] = np.stack([a, c, d], axis=1)
    return RibbonMesh(verts.reshape(-1, 3), faces, k1.ravel(), (n_s, n_v), closed)


def angle_defects(mesh: RibbonMesh) -> np.ndarray:
    """``2 pi - sum of incident angles`` at every interior vertex (discrete Gaussian curvature)."""
    n_s, n_v = mesh.grid_shape
    tri = mesh.vertices[mesh.faces]
    total = np.zeros(mesh.n_vertices)
    for k in range(3):
        e1 = tri[:, (k + 1) % 3] - tri[:, k]
        e2 = tri[:, (k + 2) % 3] - tri[:, k]
        ang = np.arctan2(np.linalg.norm(np.cross(e1, e2), axis=1), np.einsum("ij,ij->i", e1, e2))
        np.add.at(total, mesh.faces[:, k], ang)
    idx = np.arange(mesh.n_vertices).reshape(n_s, n_v)
    interior = idx[:, 1:-1] if mesh.closed else idx[1:-1, 1:-1]
    return 2.0 * np.pi - total[interior.ravel()]


__all__ = [
    "RibbonMesh", "ruling_direction", "ruled_surface_point", "principal_curvature",
    "surface_energy", "build_mesh", "angle_defects",
]
