"""Exception types and validation diagnostics shared across the engine."""

from __future__ import annotations

from dataclasses import dataclass


class RelaqError(Exception):
    """Base class for all engine errors."""


class DataError(RelaqError):
    """A problem in an uploaded dataset or config file.

    ``row`` is the 1-based line number in the source file (header = line 1),
    or None when the error is not tied to a single line.
    """

    def __init__(self, message: str, row: int | None = None):
        super().__init__(message if row is None else f"{message} (row {row})")
        self.row = row


class RaggedRows(DataError):
    pass


class NonMonotonicTime(DataError):
    pass


class NonUniformTimestep(DataError):
    pass


class NonNumericValue(DataError):
    pass


class EmptyDataset(DataError):
    pass


class DuplicateSeriesRow(DataError):
    pass


class MissingNameColumn(DataError):
    pass


class LengthMismatch(RelaqError):
    pass


class TooShort(RelaqError):
    pass


class UnknownKey(RelaqError):
    pass


class WindowTooLong(RelaqError):
    pass


class DegenerateSketch(RelaqError):
    pass


class SchemaViolation(RelaqError):
    """Query JSON does not match the published schema.

    ``path`` is a JSON pointer to the offending element.
    """

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


class IndexUnavailable(RelaqError):
    pass


class FocusUnresolved(RelaqError):
    pass


class QueryCancelled(RelaqError):
    pass


@dataclass(frozen=True)
class Diagnostic:
    """A validation finding returned (not raised) by validate-style operations."""

    code: str
    message: str
    severity: str = "error"  # "error" | "warning"

    def __str__(self) -> str:
        return f"{self.code}: {self.message}"

    @property
    def is_error(self) -> bool:
        return self.severity == "error"
