"""Exception types shared across the package."""


class DualmemError(Exception):
    """Base class for all package errors."""


class DimensionError(DualmemError, ValueError):
    """A dimension is invalid or two operands do not conform."""


class DilationError(DualmemError, ValueError):
    """Dilation factor must be a positive integer."""


class DiscretizationOverflowError(DualmemError, ArithmeticError):
    """Matrix exponential produced non-finite entries (dt too large for dim)."""


class ConfigError(DualmemError, ValueError):
    """A configuration document violates the schema."""


class DataFormatError(DualmemError, ValueError):
    """A dataset file is malformed."""


class TraceMismatchError(DualmemError, ValueError):
    """A recorded trace does not match the simulator configuration."""


class DivergenceError(DualmemError, RuntimeError):
    """Training loss became non-finite."""
