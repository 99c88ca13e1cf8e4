"""Exception hierarchy shared by the library and the command-line front end."""
from __future__ import annotations


class SpeedLabError(Exception):
    """Base class for every error raised by kpp_speedlab."""

    exit_code = 1


class ValidationError(SpeedLabError, ValueError):
    """An input violates a documented precondition.

    ``field`` names the offending parameter when there is one.
    """

    exit_code = 2

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message)
        self.field = field


class SolverError(SpeedLabError):
    """A numerical procedure failed to converge or to bracket."""

    exit_code = 3


class ConvergenceError(SolverError):
    def __init__(self, message: str, residual: float = float("nan"), iterations: int = 0):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class BracketingError(SolverError):
    pass


class SearchBudgetError(SolverError):
    def __init__(self, message: str, trace=()):
        super().__init__(message)
        self.trace = list(trace)


class PremiseError(SpeedLabError):
    """The hypothesis of a counterexample construction does not hold."""

    exit_code = 4


class DomainOverrunError(SpeedLabError):
    """The simulated front reached the end of the strip before ``t_end``."""

    exit_code = 5

    def __init__(self, message: str, time: float = float("nan")):
        super().__init__(message)
        self.time = time
