"""Exception types shared across the package."""


class InvalidArgumentError(ValueError):
    """An argument violates a documented precondition."""


class MapParseError(ValueError):
    """Malformed map text. ``row`` is the 0-based offending line."""

    def __init__(self, message: str, row: int):
        super().__init__(f"row {row}: {message}")
        self.row = row


class UnreachableError(RuntimeError):
    """No path exists between two free cells."""
