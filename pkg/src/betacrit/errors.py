"""Exception types shared across the numerical modules."""

from .model import ValidationError

__all__ = [
    "ValidationError",
    "KernelLimitError",
    "UnconvergedError",
    "IndeterminateError",
    "NearSingularError",
    "MethodDisagreement",
]


class KernelLimitError(ValueError):
    """The zero-energy limit kernel does not exist for this configuration."""


class UnconvergedError(RuntimeError):
    """A computation failed its internal convergence check.

    ``details`` carries the disagreeing values (counts, residuals, ...).
    """

    def __init__(self, message, details=None):
        super().__init__(message)
        self.details = details


class IndeterminateError(RuntimeError):
    """A limit classification fell between the bounded/divergent thresholds."""


class NearSingularError(RuntimeError):
    """A resolvent solve was requested too close to an eigenvalue."""


class MethodDisagreement(RuntimeError):
    """Two independent routes produced incompatible answers."""

    def __init__(self, message, values=None):
        super().__init__(message)
        self.values = values
