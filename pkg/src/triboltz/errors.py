"""Exception types shared across the package."""


class TriboltzError(Exception):
    """Base class for package errors."""


class InvalidInputError(TriboltzError, ValueError):
    """Arguments outside the documented domain."""


class DegenerateConfigurationError(TriboltzError, ValueError):
    """Velocity configuration for which a quantity is undefined."""


class NumericalFailureError(TriboltzError, RuntimeError):
    """A numerical routine failed to reach its tolerance.

    ``best`` carries the best value found, if any.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best
