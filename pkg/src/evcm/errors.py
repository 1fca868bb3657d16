"""Exception types shared across the package."""


class EvcmError(Exception):
    """Base class for all package errors."""


class ValidationError(EvcmError):
    """Invalid argument, configuration, or domain-invariant violation."""


class FormatError(ValidationError):
    """Malformed input file: bad magic, bad schema, or parse failure."""


class NumericalError(EvcmError):
    """Numerical failure during estimation (degenerate or non-finite values)."""
