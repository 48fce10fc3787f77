class SchedLabError(Exception):
    """Base class for all errors raised by schedlab."""


class ValidationError(SchedLabError, ValueError):
    """Input data or configuration violates a documented constraint."""


class TraceFormatError(ValidationError):
    """A trace file row could not be parsed."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = []
        if line is not None:
            where.append(f"line {line}")
        if column is not None:
            where.append(f"column {column!r}")
        if where:
            message = f"{', '.join(where)}: {message}"
        super().__init__(message)


class TrainingError(SchedLabError, RuntimeError):
    """Model fitting diverged or could not proceed."""
