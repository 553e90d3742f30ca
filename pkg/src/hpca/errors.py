"""Exception types shared across the toolkit.

Every error raised by this package derives from HpcaError so callers can
catch toolkit failures with a single except clause while still telling
shape problems apart from protocol misuse or corrupt files.
"""


class HpcaError(Exception):
    """Base class for all errors raised by this package."""


class ShapeError(HpcaError, ValueError):
    """Operands have incompatible or invalid dimensions."""


class ParameterError(HpcaError, ValueError):
    """A parameter violates its documented bounds."""


class ProtocolError(HpcaError, RuntimeError):
    """An operation was called in the wrong order (e.g. step before first block)."""


class DegenerateBasisError(HpcaError, ValueError):
    """QR input is numerically rank deficient."""

    def __init__(self, column: int, message: str | None = None):
        self.column = column
        super().__init__(message or f"rank-deficient input: column {column} is degenerate")


class AsymmetryError(HpcaError, ValueError):
    """A matrix required to be symmetric is not, beyond tolerance."""


class ConvergenceError(HpcaError, ArithmeticError):
    """An iterative solver failed to converge within its sweep budget."""


class UndefinedMetricError(HpcaError, ValueError):
    """A quality metric is undefined for the given input (e.g. all-zero signal)."""


class FormatError(HpcaError, ValueError):
    """A file does not match the expected magic/version/layout."""


class CorruptionError(FormatError):
    """A file matches the format but its payload fails size or checksum validation."""


class ParseError(HpcaError, ValueError):
    """A trace file could not be parsed; carries the failing offset."""

    def __init__(self, message: str, *, line: int | None = None, byte: int | None = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if byte is not None:
            where.append(f"byte {byte}")
        suffix = f" ({', '.join(where)})" if where else ""
        self.line = line
        self.byte = byte
        super().__init__(message + suffix)
