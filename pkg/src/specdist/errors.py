"""Exception types shared across the package."""


class SpecdistError(Exception):
    """Base class for every error raised by this package."""


class DomainError(SpecdistError, ValueError):
    """An argument lies outside the mathematical domain of the operation."""


class DegenerateInputError(DomainError):
    """Input data collapsed to something the operation cannot process."""


class NumericError(SpecdistError, ArithmeticError):
    """A numerical routine failed to reach its accuracy target.

    ``achieved`` carries the best error estimate the routine could certify,
    when one is available.
    """

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved
