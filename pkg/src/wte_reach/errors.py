"""Exception types raised across the package."""


class WteReachError(Exception):
    """Base class for package errors."""


class GridIndexError(WteReachError, IndexError):
    pass


class DomainError(WteReachError, ValueError):
    """A query point lies outside the grid box."""


class GridMismatchError(WteReachError, ValueError):
    """Two fields live on incompatible grids."""


class ConfigError(WteReachError, ValueError):
    pass


class ProfileUsageError(WteReachError, ValueError):
    """An adversarial profile was evaluated without costate context."""


class NumericalInstabilityError(WteReachError, ArithmeticError):
    pass


class FieldFormatError(WteReachError, ValueError):
    """A value-field file is malformed.

    ``offset`` is the byte position where decoding failed.
    """

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset
