"""Exception types shared across the package."""


class SbtrainError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(SbtrainError, ValueError):
    """A config file or request is invalid; the message names the offending field."""


class DataFormatError(SbtrainError, ValueError):
    """A dataset file is malformed; the message names the byte offset or column."""


class ShapeError(SbtrainError, ValueError):
    """An array argument has the wrong shape or an index is out of range."""


class NumericsError(SbtrainError, ArithmeticError):
    """A non-finite value appeared where the math requires finite numbers."""
