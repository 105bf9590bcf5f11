"""Exception types shared across the package."""


class FvarError(Exception):
    """Base class for package errors."""


class ConfigError(FvarError, ValueError):
    """Invalid arguments, grids, or file formats supplied by the caller."""


class DataError(FvarError, ValueError):
    """Input data violates a precondition (e.g. nonpositive prices)."""


class NumericalError(FvarError, RuntimeError):
    """A numerical routine failed (rank deficiency, divergence, ...)."""


class NonstationaryError(NumericalError):
    """Spectral radius at or above one where stationarity is required."""
