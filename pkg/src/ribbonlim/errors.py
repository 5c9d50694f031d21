"""Exception types shared across the package.

Every error carries a ``kind`` string and a ``location`` mapping so the CLI
can serialize it without knowing the concrete class.
"""

from __future__ import annotations


class RibbonError(Exception):
    kind = "RibbonError"

    def __init__(self, message: str, **location):
        super().__init__(message)
        self.location = location


class DomainError(RibbonError, ValueError):
    """Input outside the mathematical domain of an operation."""

    kind = "DomainError"


class InflectionPoint(RibbonError):
    """Curvature is numerically zero, so the Frenet frame and eta are undefined."""

    kind = "InflectionPoint"

    def __init__(self, t: float, kappa: float | None = None):
        msg = f"curvature vanishes at t={t:.17g}"
        if kappa is not None:
            msg += f" (kappa={kappa:.3e})"
        super().__init__(msg, t=float(t))
        self.t = float(t)


class EdgeOfRegression(RibbonError):
    """Rulings cross inside the strip: 1 + v*eta' vanishes."""

    kind = "EdgeOfRegression"

    def __init__(self, t: float, v: float):
        super().__init__(f"edge of regression at t={t:.17g}, v={v:.17g}", t=float(t), v=float(v))
        self.t = float(t)
        self.v = float(v)


class DegenerateCurve(RibbonError):
    kind = "DegenerateCurve"


class GradientBlocked(RibbonError):
    """A finite-difference probe landed where the objective is infinite."""

    kind = "GradientBlocked"

    def __init__(self, index: int, message: str = ""):
        super().__init__(message or f"objective infinite at probe of coordinate {index}", index=int(index))
        self.index = int(index)


class NoDescent(RibbonError):
    kind = "NoDescent"

    def __init__(self, message: str, report=None):
        iteration = None if report is None else report.iterations
        super().__init__(message, iteration=iteration)
        self.report = report
