"""Exception types shared across the package."""


class DomainError(ValueError):
    """Input outside the domain where a formula or construction is defined."""


class NumericError(ArithmeticError):
    """A numerical routine failed to reach its requested tolerance.

    ``achieved`` carries the error estimate that was actually reached.
    """

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class SizeError(DomainError):
    """A construction would produce more objects than the configured limit."""
