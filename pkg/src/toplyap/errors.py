"""Exception types shared across the package."""


class InputError(ValueError):
    """Raised when an operation receives malformed or out-of-range input."""


class InvariantViolation(RuntimeError):
    """Raised when a computed result breaks a guaranteed property."""
