"""Exception hierarchy for ppest."""


class PPEstError(Exception):
    """Base class for all errors raised by this package."""


class NonConvergence(PPEstError, ArithmeticError):
    """Remez exchange failed to equioscillate within the iteration budget."""

    def __init__(self, message, piece=None):
        super().__init__(message)
        self.piece = piece


class DomainError(PPEstError, ValueError):
    """An argument lies outside the domain on which an operation is defined."""


class BadParam(PPEstError, ValueError):
    """A property or configuration parameter is invalid."""


class SpecMismatch(PPEstError, ValueError):
    """A histogram or distribution disagrees with the property specification."""


class CapExceeded(PPEstError, RuntimeError):
    """An exhaustive scan would need more evaluations than allowed."""


class NoSolution(PPEstError, RuntimeError):
    """No sampling parameter below the scan cap satisfies the conditions."""
