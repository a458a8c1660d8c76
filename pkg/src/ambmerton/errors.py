"""Exception hierarchy shared across the package."""


class AmbMertonError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(AmbMertonError, ValueError):
    """An argument violates a documented precondition."""


class UnsupportedError(InvalidArgumentError):
    """Requested configuration is outside the supported scope."""


class NumericError(AmbMertonError, ArithmeticError):
    """A numeric evaluation produced a non-finite or overflowing value.

    ``node`` carries the evaluation point at which the failure occurred,
    when one is known.
    """

    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node


class DomainError(NumericError):
    """A function was evaluated (or is non-finite) outside its domain."""


class BracketingError(NumericError):
    """A root finder was called without a sign change on the interval."""


class ConvergenceError(NumericError):
    """An iterative solver did not converge within its iteration budget."""


class DataError(AmbMertonError, ValueError):
    """Input data failed parsing or validation.

    ``line`` is the 1-based line number for file-parsing failures.
    """

    def __init__(self, message, line=None):
        super().__init__(message)
        self.line = line


class DegenerateVolatilityError(DataError):
    """A volatility estimate is too close to zero to scale returns."""
