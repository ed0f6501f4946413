"""Exception hierarchy; each class maps to one CLI exit code."""


class FracHeatError(Exception):
    exit_code = 1


class UsageError(FracHeatError, ValueError):
    """Bad input shape, range, or configuration."""

    exit_code = 1


class NumericalFailure(FracHeatError, ArithmeticError):
    """A computation produced a non-finite value or failed to converge."""

    exit_code = 2


class AssumptionViolation(FracHeatError):
    """Input data violate a solvability hypothesis of the inverse problem.

    ``assumption`` names the violated hypothesis, e.g. ``"(iii)"``.
    """

    exit_code = 3

    def __init__(self, assumption, message):
        super().__init__(f"assumption {assumption} violated: {message}")
        self.assumption = assumption
