"""Exception hierarchy shared by the library and the CLI.

Library code raises; only ``cli.main`` turns an error into a message and an
exit code.
"""

from typing import Optional


class URNGError(Exception):
    """Base class for every error raised by markov_urng."""

    exit_code = 1


class ValidationError(URNGError):
    """Input does not describe a usable model or query."""

    exit_code = 2


class InfeasibleQuery(URNGError):
    """The query is well formed but the requested bound does not exist there."""

    exit_code = 3


class ConvergenceFailure(URNGError):
    pass


class MalformedDocument(ValidationError):
    pass


class NotStochastic(ValidationError):
    def __init__(self, message: str, column: Optional[int] = None):
        super().__init__(message)
        self.column = column


class NotIrreducible(ValidationError):
    pass


class AssumptionViolated(ValidationError):
    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report


class SupportViolation(ValidationError):
    pass


class StateSpaceTooLarge(ValidationError):
    pass


class LengthMismatch(ValidationError):
    pass


class BudgetExceeded(ValidationError):
    pass


class DegenerateVariance(ValidationError):
    pass


class OutOfWindow(InfeasibleQuery):
    pass


class NoFeasiblePoint(InfeasibleQuery):
    pass


class Infeasible(InfeasibleQuery):
    pass
