"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """Raised when an argument violates a documented precondition."""


class DomainError(RuntimeError):
    """Raised when an operation is queried outside its mathematical domain."""


class IntegrationError(RuntimeError):
    """Raised when a curve integration cannot make progress."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class InternalError(RuntimeError):
    """Raised when an internal consistency guarantee is violated."""
