"""Exception types raised across the package."""

from __future__ import annotations


class RigError(Exception):
    """Base class for all package errors."""


class InvalidStateError(RigError, ValueError):
    """Non-finite or otherwise malformed robot/target state."""


class SingularGeometryError(RigError, ValueError):
    """Robot and target coincide, so range/bearing derivatives are undefined."""


class DimensionError(RigError, ValueError):
    pass


class IllConditionedUpdateError(RigError, ArithmeticError):
    """Innovation covariance too close to singular for a Kalman update."""


class DomainError(RigError, ValueError):
    """Covariance outside the domain of the objective (e.g. not positive definite)."""


class BudgetError(RigError, RuntimeError):
    """An enumeration would exceed its configured expansion budget."""


class NotInClassError(RigError, ValueError):
    """Set function fails a monotonicity/submodularity precondition."""


class UndefinedCurvatureError(RigError, ArithmeticError):
    """A curvature ratio has a zero denominator with a nonzero numerator."""


class ConfigError(RigError, ValueError):
    """Malformed or unknown configuration content."""
