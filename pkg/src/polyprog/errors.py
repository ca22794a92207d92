"""Exception types shared across the package."""


class PolyprogError(Exception):
    """Base class for all package errors."""


class ArgumentError(PolyprogError, ValueError):
    """An input violates a documented precondition."""


class ResourceError(PolyprogError, RuntimeError):
    """A computation would exceed its configured enumeration or memory budget."""


class NumericalInstabilityError(PolyprogError, ArithmeticError):
    """A provably non-negative quantity came out clearly negative."""


class InvariantError(PolyprogError, AssertionError):
    """An internal invariant failed; ``trace`` carries diagnostics when available."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace
