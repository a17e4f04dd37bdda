"""Exception hierarchy.

Every error carries the CLI exit code it maps to: 1 schema, 2 numeric,
3 resource, 4 IO.
"""


class FracDimError(Exception):
    exit_code = 2


class SchemaError(FracDimError, ValueError):
    exit_code = 1


class InvalidDomainError(FracDimError, ValueError):
    """Requested interval is empty or lies outside the curve's domain."""


class NumericDomainError(FracDimError, ArithmeticError):
    """A profile, amplitude or radicand produced a non-finite/invalid value."""


class DegeneratePointError(NumericDomainError):
    """The phase point (x, x') vanished, so its angle is undefined."""


class PrecisionError(NumericDomainError):
    pass


class PreconditionError(FracDimError, ValueError):
    pass


class HorizonError(NumericDomainError):
    """A bracket was not found before the scan horizon."""

    def __init__(self, message, last_t=None):
        super().__init__(message)
        self.last_t = last_t


class UniquenessViolationError(NumericDomainError):
    def __init__(self, message, k=None):
        super().__init__(message)
        self.k = k


class InversionError(NumericDomainError):
    pass


class InsufficientResolutionError(NumericDomainError):
    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class LatticeExhaustedError(NumericDomainError):
    pass


class HypothesisFailure(NumericDomainError):
    """The supplied functions do not satisfy a required growth hypothesis."""


class ResourceLimitError(FracDimError, MemoryError):
    exit_code = 3

    def __init__(self, message, cap=None):
        super().__init__(message)
        self.cap = cap


class OutputError(FracDimError, OSError):
    """A file could not be read or written."""

    exit_code = 4
