"""Exception types shared across the package."""


class StrongEPIError(Exception):
    """Base class for all errors raised by this package."""


class InvalidParameterError(StrongEPIError, ValueError):
    """A numeric argument violates an operation's precondition."""


class TruncationError(StrongEPIError):
    """A grid does not cover the support required by a construction."""


class GridOverflowError(StrongEPIError):
    """A transformed density does not fit on the requested output grid."""


class NumericGateError(StrongEPIError):
    """A numerical estimate failed its stability check."""
