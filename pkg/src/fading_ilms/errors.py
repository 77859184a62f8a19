"""Exception types shared across the package."""


class ParameterError(ValueError):
    """A numeric parameter lies outside its admissible domain."""


class ValidationError(ValueError):
    """A matrix or profile failed a structural check.

    ``violations`` holds every problem found, not only the first.
    """

    def __init__(self, message, violations=()):
        super().__init__(message)
        self.violations = list(violations)


class StabilityError(ArithmeticError):
    """A closed-form quantity was requested on an unstable configuration."""

    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node


class ConsistencyError(RuntimeError):
    """Two independent evaluations of the same quantity disagree."""


class ConfigError(ValueError):
    """The configuration file could not be parsed or failed validation."""
