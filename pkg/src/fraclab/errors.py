"""Exception taxonomy shared by all modules.

Two families matter to callers (and to the CLI exit-code mapping):
``ValidationError`` for bad inputs/parameters, ``NumericalError`` for
computations that started but could not finish reliably.
"""


class ValidationError(ValueError):
    """Invalid argument, parameter constraint violation, or domain error."""


class NumericalError(RuntimeError):
    """A numerical procedure failed its own accuracy or convergence test."""


class PoleError(ValidationError):
    """Evaluation exactly at a pole of the function."""


class ConvergenceError(NumericalError):
    """Iterative procedure did not converge within its budget."""


class DivergenceError(NumericalError):
    """Computed trajectory exceeded the overflow guard."""

    def __init__(self, message: str, step: int):
        super().__init__(message)
        self.step = step
