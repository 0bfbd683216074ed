"""Shared error types."""


class ValidationError(ValueError):
    """A config or input value is out of contract; carries the offending field name."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class TraceFormatError(ValueError):
    """A trace file does not match the expected column layout."""
