"""Parsing and validation of dataset CSVs and their semantic-label configs."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone

from .errors import (
    Diagnostic,
    DuplicateSeriesRow,
    EmptyDataset,
    MissingNameColumn,
    NonMonotonicTime,
    NonNumericValue,
    NonUniformTimestep,
    RaggedRows,
)

# Relative tolerance when checking that the timestamp grid is uniform.
_STEP_RTOL = 1e-9

ALPHABET_SIZE = 4


@dataclass(frozen=True)
class Dataset:
    """An immutable multiple-time-series table on a uniform time grid."""

    timestamps: tuple[float, ...]
    series: dict[str, tuple[float, ...]]
    step_unit: str = "sample"

    @property
    def length(self) -> int:
        return len(self.timestamps)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(self.series.keys())

    @property
    def step(self) -> float:
        return self.timestamps[1] - self.timestamps[0]


@dataclass(frozen=True)
class MetaLabels:
    """Per-series semantic labels, e.g. labels["SF"]["State"] == "CA"."""

    labels: dict[str, dict[str, str]] = field(default_factory=dict)
    keys: tuple[str, ...] = ()

    def get(self, series: str, key: str) -> str | None:
        return self.labels.get(series, {}).get(key)


@dataclass(frozen=True)
class PreprocessParams:
    """User-chosen compression and window-size parameters."""

    sampling_length: int
    box_length: int
    alphabet_size: int = ALPHABET_SIZE

    def __post_init__(self):
        if self.sampling_length < 1:
            raise ValueError("sampling_length must be a positive integer")
        if self.box_length < self.sampling_length:
            raise ValueError("box_length must be >= sampling_length")
        if self.alphabet_size != ALPHABET_SIZE:
            raise ValueError(f"alphabet_size is fixed at {ALPHABET_SIZE}")

    @property
    def window_symbols(self) -> int:
        """Window size in compressed samples; the ratio rounds half up."""
        w = int(math.floor(self.box_length / self.sampling_length + 0.5))
        return max(w, 1)


def _parse_timestamp(cell: str, row: int) -> float:
    try:
        return float(cell)
    except ValueError:
        pass
    try:
        dt = datetime.fromisoformat(cell)
    except ValueError:
        raise NonNumericValue(f"timestamp {cell!r} is not numeric or ISO-8601", row=row)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.timestamp()


def _split_rows(text: str) -> list[list[str]]:
    # csv handles quoting and both LF and CRLF line endings.
    return [row for row in csv.reader(io.StringIO(text)) if row]


def parse_dataset(csv_text: str, step_unit: str = "sample") -> Dataset:
    """Parse a dataset CSV: header ``timestamp,<name1>,<name2>,...``, one row
    per time point.

    Timestamps must form a strictly increasing uniform grid; all value cells
    must be numeric. Row numbers in errors are 1-based file lines.
    """
    rows = _split_rows(csv_text)
    if not rows:
        raise EmptyDataset("file contains no rows")
    header = [cell.strip() for cell in rows[0]]
    if len(header) < 2:
        raise EmptyDataset("dataset has no value columns", row=1)
    names = header[1:]
    for name in names:
        if not name or "," in name or "\n" in name:
            raise EmptyDataset(f"invalid series name {name!r} in header", row=1)
    if len(set(names)) != len(names):
        raise DuplicateSeriesRow("duplicate series name in header", row=1)
    if len(rows) < 3:
        raise EmptyDataset("dataset needs at least 2 data rows")

    ncols = len(header)
    timestamps: list[float] = []
    columns: list[list[float]] = [[] for _ in names]
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != ncols:
            raise RaggedRows(f"expected {ncols} columns, got {len(row)}", row=i)
        ts = _parse_timestamp(row[0].strip(), i)
        if timestamps and ts <= timestamps[-1]:
            raise NonMonotonicTime(f"timestamp {row[0]!r} does not increase", row=i)
        timestamps.append(ts)
        for j, cell in enumerate(row[1:]):
            try:
                columns[j].append(float(cell))
            except ValueError:
                raise NonNumericValue(
                    f"non-numeric value {cell.strip()!r} in column {names[j]!r}", row=i
                )

    if len(timestamps) >= 3:
        step = timestamps[1] - timestamps[0]
        scale = max(abs(timestamps[0]), abs(timestamps[-1]), abs(step), 1.0)
        for i in range(2, len(timestamps)):
            if abs((timestamps[i] - timestamps[i - 1]) - step) > _STEP_RTOL * scale:
                raise NonUniformTimestep("timestamp step is not constant", row=i + 2)

    series = {name: tuple(col) for name, col in zip(names, columns)}
    return Dataset(timestamps=tuple(timestamps), series=series, step_unit=step_unit)


def serialize_dataset(dataset: Dataset) -> str:
    """Inverse of :func:`parse_dataset` for numeric-timestamp datasets."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["timestamp", *dataset.names])
    for i, ts in enumerate(dataset.timestamps):
        writer.writerow([repr(ts), *(repr(dataset.series[n][i]) for n in dataset.names)])
    return out.getvalue()


def parse_config(csv_text: str) -> MetaLabels:
    """Parse the label config CSV: header ``name,<key1>,<key2>,...``, one row
    per series. Empty cells mean the label is absent for that series.
    """
    rows = _split_rows(csv_text)
    if not rows:
        return MetaLabels()
    header = [cell.strip() for cell in rows[0]]
    if not header or header[0] != "name":
        raise MissingNameColumn("config header must start with a 'name' column", row=1)
    keys = header[1:]

    labels: dict[str, dict[str, str]] = {}
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise RaggedRows(f"expected {len(header)} columns, got {len(row)}", row=i)
        name = row[0].strip()
        if not name:
            raise MissingNameColumn("empty series name", row=i)
        if name in labels:
            raise DuplicateSeriesRow(f"series {name!r} appears twice", row=i)
        labels[name] = {
            key: cell.strip() for key, cell in zip(keys, row[1:]) if cell.strip()
        }
    return MetaLabels(labels=labels, keys=tuple(keys))


def validate(dataset: Dataset, labels: MetaLabels) -> list[Diagnostic]:
    """Cross-check a parsed dataset against its labels.

    Unknown series in the config are errors; dataset series without a label
    row are warnings. Returns an empty list when the pair is consistent.
    """
    diagnostics: list[Diagnostic] = []
    for name in labels.labels:
        if name not in dataset.series:
            diagnostics.append(
                Diagnostic("UnknownSeries", f"label row {name!r} has no dataset series")
            )
    if labels.labels:
        for name in dataset.names:
            if name not in labels.labels:
                diagnostics.append(
                    Diagnostic(
                        "UnlabeledSeries",
                        f"series {name!r} has no label row",
                        severity="warning",
                    )
                )
    return diagnostics
