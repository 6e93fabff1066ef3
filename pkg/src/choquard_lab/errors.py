"""Exception hierarchy shared by all modules."""


class ChoquardError(Exception):
    """Base class for all errors raised by this package."""


class InputDomainError(ChoquardError, ValueError):
    """An argument lies outside the domain of the operation."""


class StructuralError(ChoquardError, ValueError):
    """Objects that must share a grid (or a sector type) do not."""


class SearchFailureError(ChoquardError):
    """A bracketing search for a shooting parameter found no sign change."""

    def __init__(self, message, scan=None):
        super().__init__(message)
        self.scan = scan or []


class ScalingFailureError(ChoquardError):
    """No admissible scaling factor matches the requested frequency."""


class GridTooSmallError(ChoquardError):
    """The far-field window is contaminated by mass beyond the grid."""


class ExtrapolationError(ChoquardError):
    """Resampling would leave the support of the source grid."""


class WindowError(ChoquardError):
    """The trusted far-field window is empty (underflow)."""


class SingularityError(ChoquardError):
    """Evaluation at a coincident pair of points."""
