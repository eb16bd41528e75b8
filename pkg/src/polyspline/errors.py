"""Exception types raised by the library."""


class PolysplineError(Exception):
    """Base class for library errors."""


class InputError(PolysplineError, ValueError):
    """Malformed or inconsistent user input."""


class UnsupportedFrequencyError(InputError):
    """Frequency outside the range a construction is defined for (k = 0, or |k| = 1 where excluded)."""


class PreconditionError(InputError):
    """An argument violates a mathematical precondition of the operation."""


class DivergenceError(PolysplineError, ArithmeticError):
    """An improper integral does not converge."""


class ConstructionError(PolysplineError, ArithmeticError):
    """A linear system could not be solved to the required accuracy."""

    def __init__(self, message, residual=None, k=None):
        super().__init__(message)
        self.residual = residual
        self.k = k
