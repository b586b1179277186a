"""Exception types shared across the package."""


class V2VLabError(Exception):
    """Base class for all package-specific errors."""


class NonConvergenceError(V2VLabError):
    """A numerical procedure failed to reach its tolerance within budget."""


class DomainError(V2VLabError):
    """An argument lies outside the mathematical domain of an operation."""


class ValidityError(V2VLabError):
    """Closed-form transform requested outside its validity region."""


class SingularityError(V2VLabError):
    """Transform denominator vanished away from the removable point."""


class AliasingError(V2VLabError):
    """Coefficient extraction aliasing bound exceeded."""


class DerivativeInstabilityError(V2VLabError):
    """Finite-difference derivative estimates failed their agreement check."""


class OutOfRangeError(V2VLabError):
    """A closed-form evaluation would overflow for the given parameters."""


class ConfigParseError(V2VLabError):
    """Config file is syntactically malformed."""

    def __init__(self, message, line=None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class ConfigValidationError(V2VLabError):
    """Config value is out of range or a key is unknown."""

    def __init__(self, key, reason):
        super().__init__(f"{key}: {reason}")
        self.key = key
        self.reason = reason


class InsufficientDeadEndsError(V2VLabError):
    """Too few dead-end events observed for a statistically meaningful table."""
