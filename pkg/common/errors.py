"""
Exception hierarchy shared by all packages.
"""
from typing import Any, Iterable, Optional


class RarcError(Exception):
    """Base class for solver errors."""


class DimensionError(RarcError, ValueError):
    """Shape or length mismatch."""


class DomainError(RarcError, ValueError):
    """Input outside the domain of an operation (non-finite, non-positive...)."""


class RankError(DomainError):
    """Rank-deficient input to a factorization."""

    def __init__(self, message: str, column: int):
        super().__init__(message)
        self.column = column


class GeometryError(RarcError):
    """Numerical failure inside a manifold operation."""


class CapabilityError(RarcError):
    """Requested operation is not provided by a manifold or an objective."""


class UsageError(RarcError, ValueError):
    """Arguments combined in an invalid way (e.g. vectors at different base points)."""


class EvaluationError(RarcError):
    """Objective produced a non-finite value."""

    def __init__(self, message: str, point: Any = None):
        super().__init__(message)
        self.point = point


class SubsolverError(RarcError):
    """Cubic subproblem solution could not satisfy the model decrease/stationarity test."""

    def __init__(self, message: str, grad_norm: float, target: float):
        super().__init__(f"{message} (grad_norm={grad_norm:.3e}, target={target:.3e})")
        self.grad_norm = grad_norm
        self.target = target


class NumericalError(RarcError):
    """Iterative numerical procedure failed to converge."""


class ConfigError(RarcError, ValueError):
    """Invalid configuration values."""

    def __init__(self, fields: Iterable[str], message: Optional[str] = None):
        self.fields = list(fields)
        super().__init__(message or f"Invalid configuration field(s): {', '.join(self.fields)}")
