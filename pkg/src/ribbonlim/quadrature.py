"""Composite Gauss-Legendre rules on [0, 1] (and arbitrary intervals)."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DomainError


@lru_cache(maxsize=None)
def _legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


@dataclass(frozen=True)
class QuadratureScheme:
    panels: int = 16
    nodes_per_panel: int = 16

    def __post_init__(self):
        if int(self.panels) < 1:
            raise DomainError("panels must be >= 1", panels=self.panels)
        if not 4 <= int(self.nodes_per_panel) <= 32:
            raise DomainError("nodes_per_panel must lie in 4..32", nodes_per_panel=self.nodes_per_panel)

    @property
    def size(self) -> int:
        return self.panels * self.nodes_per_panel

    def refined(self, factor: int = 2) -> "QuadratureScheme":
        return QuadratureScheme(self.panels * factor, self.nodes_per_panel)

    def nodes(self, a: float = 0.0, b: float = 1.0, breakpoints=()) -> tuple[np.ndarray, np.ndarray]:
        """Nodes and weights on [a, b]; panels are additionally split at ``breakpoints``."""
        if not breakpoints:
            return _uniform_nodes(self.panels, self.nodes_per_panel, float(a), float(b))
        edges = np.linspace(a, b, self.panels + 1)
        extra = [float(p) for p in breakpoints if a < p < b]
        edges = np.unique(np.concatenate([edges, extra]))
        return _panel_nodes(edges, self.nodes_per_panel)

    def to_dict(self) -> dict:
        return {"panels": int(self.panels), "nodes_per_panel": int(self.nodes_per_panel)}


@lru_cache(maxsize=64)
def _uniform_nodes(panels: int, order: int, a: float, b: float):
    t, w = _panel_nodes(np.linspace(a, b, panels + 1), order)
    t.setflags(write=False)
    w.setflags(write=False)
    return t, w


def _panel_nodes(edges: np.ndarray, order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = _legendre(order)
    lo = edges[:-1, None]
    half = 0.5 * np.diff(edges)[:, None]
    t = (lo + half * (x + 1.0)).ravel()
    weights = (half * w).ravel()
    return t, weights


DEFAULT_QUAD = QuadratureScheme(16, 16)
