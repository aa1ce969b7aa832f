"""Exception hierarchy shared by all modules."""

from __future__ import annotations

__all__ = [
    "FracSpdeError",
    "ParameterDomainError",
    "GridError",
    "UnsupportedDomainError",
    "PointOutsideDomainError",
    "BracketError",
    "RootFindingError",
    "InadmissibleParametersError",
    "InsufficientModesError",
    "QuadratureError",
    "FactorizationError",
    "InsufficientReplicatesError",
    "KindMismatchError",
    "FitWindowError",
    "ConfigError",
]


class FracSpdeError(Exception):
    """Base class for every error raised by this package."""


class ParameterDomainError(FracSpdeError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class GridError(FracSpdeError, ValueError):
    """A time or space grid is too small, too coarse or not uniform."""


class UnsupportedDomainError(FracSpdeError, ValueError):
    pass


class PointOutsideDomainError(FracSpdeError, ValueError):
    pass


class BracketError(FracSpdeError, RuntimeError):
    """A root could not be bracketed.

    The offending search interval is kept in :attr:`interval`.
    """

    def __init__(self, message: str, interval: tuple[float, float] | None = None):
        super().__init__(message)
        self.interval = interval


class RootFindingError(FracSpdeError, RuntimeError):
    """Eigenvalue construction failed for a specific mode."""

    def __init__(self, message: str, mode_index=None):
        super().__init__(message)
        self.mode_index = mode_index


class InadmissibleParametersError(FracSpdeError, ValueError):
    """Fractional exponents violate a hypothesis required by an operation."""


class InsufficientModesError(FracSpdeError, ValueError):
    pass


class QuadratureError(FracSpdeError, RuntimeError):
    """Adaptive quadrature did not reach its tolerance.

    ``estimate`` carries the last achieved value, ``error`` its estimated error.
    """

    def __init__(self, message: str, estimate=None, error=None):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


class FactorizationError(FracSpdeError, RuntimeError):
    def __init__(self, message: str, mode_index=None):
        super().__init__(message)
        self.mode_index = mode_index


class InsufficientReplicatesError(FracSpdeError, ValueError):
    pass


class KindMismatchError(FracSpdeError, ValueError):
    pass


class FitWindowError(FracSpdeError, ValueError):
    """A slope-fit window holds too few lags or non-positive values."""


class ConfigError(FracSpdeError, ValueError):
    """Run configuration is invalid; ``field`` names the offending entry."""

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message)
        self.field = field
