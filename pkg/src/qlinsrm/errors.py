"""Exception hierarchy shared by every module.

CLI exit codes are attached to the classes so the command layer can map
errors without a lookup table.
"""


class QlinError(Exception):
    """Base class for domain errors raised by this package."""

    exit_code = 2


class DimensionError(QlinError, ValueError):
    pass


class InvalidInputError(QlinError, ValueError):
    pass


class PreconditionError(QlinError, ValueError):
    pass


class NotSeparatingError(QlinError):
    """A classifier misclassifies an example where separation was required."""


class InfeasibleError(QlinError):
    """A hard-margin problem has no strictly separating solution."""


class DivergenceError(QlinError):
    """Training produced a non-finite objective.

    ``last_good`` holds the last iterate with a finite objective.
    """

    def __init__(self, message, last_good=None):
        super().__init__(message)
        self.last_good = last_good


class InconclusiveError(QlinError):
    """The probe mesh is too coarse to certify the named bound."""

    def __init__(self, message, failing_bound=None):
        super().__init__(message)
        self.failing_bound = failing_bound


class BudgetError(QlinError):
    exit_code = 3


class SchemaError(QlinError):
    pass
