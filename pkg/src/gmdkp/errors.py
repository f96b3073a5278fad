"""Exception types shared across the package."""


class GmdkpError(Exception):
    """Base class for all package-specific errors."""


class InstanceFormatError(GmdkpError):
    """Raised when an instance file cannot be parsed or is inconsistent."""


class BudgetExceededError(GmdkpError):
    """Raised when an exact computation would exceed its node budget."""


class InfeasibleInstanceError(GmdkpError):
    """Raised when an instance admits no feasible selection at all."""


class NumericsError(GmdkpError):
    """Raised when an iterative engine produces a non-finite value.

    Carries the sweep index at which the failure was detected, and the
    pick index when raised from within a greedy loop.
    """

    def __init__(self, message: str, sweep: int | None = None, pick: int | None = None):
        super().__init__(message)
        self.sweep = sweep
        self.pick = pick


class DegenerateSaddleError(GmdkpError):
    """Raised when the saddle-point solver collapses (Q - q below floor)."""


class SaddleConvergenceError(GmdkpError):
    """Raised when the saddle-point solver fails to reach a stationary point."""
