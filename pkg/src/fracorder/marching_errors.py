"""Failure types raised by the time-marching kernels."""


class StepSolveError(RuntimeError):
    """The implicit step system could not be solved at some time step."""


class NumericalBlowUpError(ArithmeticError):
    """Non-finite values appeared in the solution at some time step."""
