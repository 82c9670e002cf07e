"""Exception types shared across the library."""


class NstLabError(Exception):
    """Base class for all library errors."""


class ConfigurationError(NstLabError):
    """Invalid parameters, grid sizes, windows, or experiment configs."""


class SingularModeError(NstLabError):
    """A Fourier multiplier is undefined at the zero mode for this input."""


class RangeError(NstLabError):
    """Index outside the active window of a filter bank or sweep."""


class VacuumError(NstLabError):
    """The density floor 1 + a >= delta_vac was violated."""

    def __init__(self, message, location=None, value=None):
        super().__init__(message)
        self.location = location
        self.value = value


class RecoveryError(NstLabError):
    """Physical-variable recovery hit a nonpositive pressure or density."""


class InsufficientDataError(NstLabError):
    """Too few samples for the requested time norm or fit."""


class DataError(NstLabError):
    """Nonpositive or otherwise unusable data passed to a fit."""


class OutOfValidityError(NstLabError):
    """Evaluation requested outside a bound's validity region."""


class AccuracyError(NstLabError):
    """A quadrature or tail check failed to converge within budget."""


class CflError(NstLabError):
    """Advective CFL could not be satisfied above the minimum step size."""


class EmptyRangeWarning(UserWarning):
    """A Besov norm was requested over an empty block range."""
