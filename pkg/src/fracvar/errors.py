"""Exception types shared across the toolkit."""


class DomainError(ValueError):
    """A mathematically invalid input: wrong grid pairing, empty admissible
    set, negative quantile level, weighted mass of the wrong sign, etc."""


class ConfigError(ValueError):
    """A malformed or inconsistent run configuration."""


class ConvergenceError(RuntimeError):
    """An iterative solve failed to reach its tolerance.

    Carries the last iterate so callers can inspect or restart.
    """

    def __init__(self, message: str, result=None):
        super().__init__(message)
        self.result = result
