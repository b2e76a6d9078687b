"""Exception hierarchy shared by the solver modules."""


class ECCDError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(ECCDError, ValueError):
    """Argument lies outside a family's natural-parameter or mean domain."""


class ParseError(ECCDError, ValueError):
    """Malformed input file."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DimensionError(ECCDError, ValueError):
    """Array shapes or indices are inconsistent."""


class ConfigError(ECCDError, ValueError):
    """Invalid or degenerate solver configuration."""


class SaturationError(ECCDError, ArithmeticError):
    """Total curvature vanished, e.g. every observation is perfectly fit."""


class NumericalError(ECCDError, ArithmeticError):
    """A quantity that must be positive (a curvature denominator) is not."""
