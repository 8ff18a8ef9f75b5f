"""Exception hierarchy shared by all treewire modules."""


class TreewireError(Exception):
    """Base class for every error raised by treewire."""


class InvalidSizeError(TreewireError, ValueError):
    """Node count outside the range an operation accepts."""


class UnsupportedSizeError(InvalidSizeError):
    """Node count is valid for trees but not for this particular routine."""


class InvalidLabelError(TreewireError, ValueError):
    """Node label outside ``0..n-1``."""


class StructureError(TreewireError, ValueError):
    """Edge structure is not a spanning tree, or a move does not apply to it."""


class ConfigError(TreewireError, ValueError):
    """Invalid chain configuration or experiment manifest."""


class DegenerateSeriesError(TreewireError, ValueError):
    """Series has zero variance, so normalized autocorrelations are undefined."""


class InsufficientDataError(TreewireError, ValueError):
    """Not enough samples for the requested analysis."""


class DegenerateErrorError(TreewireError, ValueError):
    """A standard error that must be positive is zero or negative."""


class ConsistencyError(TreewireError, RuntimeError):
    """Two independent computations that must agree did not (indicates a bug)."""


class RankError(TreewireError, ArithmeticError):
    """Normal equations of a fit are singular."""


class ConvergenceError(TreewireError, RuntimeError):
    """Iterative fit hit its iteration cap; ``last`` holds the last iterate."""

    def __init__(self, message, last=None):
        super().__init__(message)
        self.last = last
