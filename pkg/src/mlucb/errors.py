"""Exception hierarchy shared by all modules."""


class MlUcbError(Exception):
    """Base class for library errors."""


class DomainError(MlUcbError, ValueError):
    """An argument lies outside the domain of an operation."""


class InsufficientDataError(MlUcbError, ValueError):
    """Not enough observations to perform a fit."""


class InvariantError(MlUcbError, RuntimeError):
    """A structural invariant (monotonicity, positive definiteness, ...) is violated."""


class TruncatedSupremumError(MlUcbError, RuntimeError):
    """A numerical supremum was attained at the boundary of the search interval.

    ``value`` and ``argmax`` hold the boundary estimate; widen ``lambda_max``
    to obtain the true supremum.
    """

    def __init__(self, message, value, argmax):
        super().__init__(message)
        self.value = value
        self.argmax = argmax


class ConfigError(MlUcbError, ValueError):
    """Invalid or inconsistent run configuration."""
