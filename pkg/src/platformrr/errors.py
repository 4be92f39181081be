"""Exception hierarchy for platformrr.

Computation-stage failures raise PlatformRRError subclasses so callers
(including the CLI) can distinguish them from usage errors.
"""


class PlatformRRError(Exception):
    """Base class for all platformrr computation errors."""


class DataError(PlatformRRError):
    """Invalid or inconsistent trial data, design, or coarsening map."""


class EstimationError(PlatformRRError):
    """An estimator's preconditions do not hold on the given data."""


class InfeasibleError(PlatformRRError):
    """A requested configuration cannot be satisfied (carries the feasible range)."""

    def __init__(self, message, feasible_range=None):
        super().__init__(message)
        self.feasible_range = feasible_range
