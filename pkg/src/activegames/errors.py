"""Shared exception types."""


class ValidationError(ValueError):
    """Raised when an input violates a structural contract."""


class CapExceededError(ValidationError):
    """Raised when an enumeration would exceed its configured cap."""

    def __init__(self, message: str, count: int):
        super().__init__(message)
        self.count = count
