"""Sensor-log ingestion: CSV parsing, day gridding, gap filling, and
assembly of the 3-D training tensor.

Log profile: UTF-8 CSV, header ``timestamp,<var1>,...,<varJ>``, one row
per second.  Timestamps are ISO-8601; cells are decimal numbers, with
``NaN`` or an empty field marking a missing reading.  Days are cut at
midnight of a configured fixed UTC offset (no DST arithmetic): the
slice index is plain wall-clock second-of-day under that offset.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import date, datetime, timedelta, timezone

import numpy as np

from .errors import (
    EmptyInputError,
    LogParseError,
    SchemaError,
    TimestampOrderError,
    UnfillableError,
)

SECONDS_PER_DAY = 86400
_EPOCH_DATE = date(1970, 1, 1)


@dataclass(frozen=True, slots=True)
class LogSchema:
    """Expected log layout.

    ``variable_names=None`` accepts whatever the header declares (the
    caller can read the names back via ``header_names``); otherwise the
    header must match exactly.  ``tz_offset`` is the fixed offset whose
    wall clock defines day boundaries and second-of-day indices, and is
    also assumed for naive timestamps.
    """

    variable_names: tuple[str, ...] | None = None
    tz_offset: timedelta = timedelta(0)


@dataclass(frozen=True, slots=True)
class RawLogRecord:
    """One parsed log row: UTC epoch seconds plus J readings (NaN = missing)."""

    timestamp: float
    values: tuple[float, ...]


@dataclass(frozen=True, slots=True)
class DayGrid:
    """K x J value grid of one calendar day with a missingness mask."""

    day_id: date
    matrix: np.ndarray
    missing_mask: np.ndarray

    def __post_init__(self) -> None:
        if self.matrix.shape != self.missing_mask.shape:
            raise ValueError("matrix and missing_mask shapes differ")
        present = self.matrix[~self.missing_mask]
        if present.size and not np.isfinite(present).all():
            raise ValueError("non-missing cells must be finite")

    @property
    def k_slices(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_vars(self) -> int:
        return self.matrix.shape[1]


@dataclass(frozen=True, slots=True)
class TrainingTensor:
    """Complete (no gaps) I-day training data as an (I, K, J) array."""

    x: np.ndarray
    day_ids: tuple[date, ...]
    variable_names: tuple[str, ...]

    def __post_init__(self) -> None:
        if self.x.ndim != 3:
            raise ValueError("tensor must be 3-D (days, slices, variables)")
        if self.n_days < 2:
            raise ValueError("need at least 2 days (variance is undefined below)")
        if len(self.day_ids) != self.n_days:
            raise ValueError("day_ids length must match day count")
        if len(self.variable_names) != self.n_vars:
            raise ValueError("variable_names length must match variable count")
        if not np.isfinite(self.x).all():
            raise ValueError("training tensor must be fully finite")

    @property
    def n_days(self) -> int:
        return self.x.shape[0]

    @property
    def k_slices(self) -> int:
        return self.x.shape[1]

    @property
    def n_vars(self) -> int:
        return self.x.shape[2]

    def day(self, i: int) -> DayGrid:
        """View of day i as a complete DayGrid."""
        return DayGrid(
            day_id=self.day_ids[i],
            matrix=self.x[i],
            missing_mask=np.zeros(self.x[i].shape, dtype=bool),
        )


def _decode(content) -> str:
    if isinstance(content, bytes):
        try:
            return content.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise LogParseError("log is not valid UTF-8: %s" % exc) from None
    return content


def _split_header(line: str) -> list[str]:
    return [f.strip() for f in line.split(",")]


def header_names(content) -> tuple[str, ...]:
    """Variable names declared by a log's header line."""
    text = _decode(content)
    first = text.split("\n", 1)[0].strip().lstrip("﻿")
    if not first:
        raise SchemaError("log has no header line")
    fields = _split_header(first)
    if fields[0] != "timestamp" or len(fields) < 2:
        raise SchemaError(
            "header must be 'timestamp,<var1>,...', got %r" % first
        )
    return tuple(fields[1:])


def _parse_timestamp(text: str, line_no: int, tz: timezone) -> float:
    raw = text.strip()
    if raw.endswith(("Z", "z")):
        raw = raw[:-1] + "+00:00"
    try:
        dt = datetime.fromisoformat(raw)
    except ValueError:
        raise LogParseError(
            "line %d: unparseable timestamp %r" % (line_no, text)
        ) from None
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=tz)
    return dt.timestamp()


def _parse_cell(text: str) -> float:
    # non-numeric text and explicit NaN both count as missing; only the
    # row structure itself is allowed to fail a parse
    raw = text.strip()
    if raw == "":
        return math.nan
    try:
        return float(raw)
    except ValueError:
        return math.nan


def parse_log(content, schema: LogSchema) -> list[RawLogRecord]:
    """Parse one log file into records.

    Structural problems (bad header, wrong field count, broken
    timestamp, out-of-order timestamps) raise; unparseable value cells
    silently become missing readings.
    """
    text = _decode(content)
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines or not lines[0].strip():
        raise SchemaError("log has no header line")
    names = header_names(text)
    if schema.variable_names is not None and names != tuple(schema.variable_names):
        raise SchemaError(
            "header variables %s do not match expected %s"
            % (list(names), list(schema.variable_names))
        )
    n_vars = len(names)
    tz = timezone(schema.tz_offset)
    records: list[RawLogRecord] = []
    prev_ts = -math.inf
    for line_no, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        fields = line.split(",")
        if len(fields) != n_vars + 1:
            raise LogParseError(
                "line %d: expected %d fields, got %d"
                % (line_no, n_vars + 1, len(fields))
            )
        ts = _parse_timestamp(fields[0], line_no, tz)
        if ts <= prev_ts:
            raise TimestampOrderError(
                "line %d: timestamps must be strictly increasing" % line_no
            )
        prev_ts = ts
        records.append(
            RawLogRecord(
                timestamp=ts,
                values=tuple(_parse_cell(f) for f in fields[1:]),
            )
        )
    if not records:
        raise EmptyInputError("log contains a header but no data rows")
    return records


def _local_seconds(record: RawLogRecord, tz_offset: timedelta) -> int:
    return math.floor(record.timestamp) + int(tz_offset.total_seconds())


def record_day(record: RawLogRecord, tz_offset: timedelta = timedelta(0)) -> date:
    """Calendar date of a record under the configured offset."""
    return _EPOCH_DATE + timedelta(days=_local_seconds(record, tz_offset) // SECONDS_PER_DAY)


def record_second(record: RawLogRecord, tz_offset: timedelta = timedelta(0)) -> int:
    """Second-of-day index of a record under the configured offset."""
    return _local_seconds(record, tz_offset) % SECONDS_PER_DAY


def group_records_by_day(
    records, tz_offset: timedelta = timedelta(0)
) -> dict[date, list[RawLogRecord]]:
    """Split records by calendar date (insertion order preserved)."""
    groups: dict[date, list[RawLogRecord]] = {}
    for rec in records:
        groups.setdefault(record_day(rec, tz_offset), []).append(rec)
    return groups


def grid_day(
    records,
    day_id: date,
    *,
    k_slices: int = SECONDS_PER_DAY,
    tz_offset: timedelta = timedelta(0),
) -> DayGrid:
    """Place records of one day onto its K x J grid.

    Later records overwrite earlier ones landing on the same second
    (loggers re-emit corrected rows last); unobserved seconds stay
    missing.  Records outside ``day_id`` or beyond the grid are caller
    errors.
    """
    records = list(records)
    n_vars = len(records[0].values) if records else 0
    matrix = np.full((k_slices, n_vars), np.nan, dtype=np.float64)
    mask = np.ones((k_slices, n_vars), dtype=bool)
    for rec in records:
        if record_day(rec, tz_offset) != day_id:
            raise ValueError(
                "record at epoch %r does not fall on day %s"
                % (rec.timestamp, day_id)
            )
        k = record_second(rec, tz_offset)
        if k >= k_slices:
            raise ValueError(
                "record at second-of-day %d exceeds grid length %d"
                % (k, k_slices)
            )
        for j, v in enumerate(rec.values):
            if math.isnan(v):
                matrix[k, j] = math.nan
                mask[k, j] = True
            else:
                matrix[k, j] = v
                mask[k, j] = False
    return DayGrid(day_id=day_id, matrix=matrix, missing_mask=mask)


def _fill_column(col: np.ndarray, missing: np.ndarray) -> bool:
    """Forward-fill then back-fill one day's column in place.

    Returns False when the column has no observation at all.
    """
    present = np.flatnonzero(~missing)
    if present.size == 0:
        return False
    last = math.nan
    started = False
    for k in range(col.shape[0]):
        if missing[k]:
            if started:
                col[k] = last
        else:
            last = col[k]
            started = True
    first_val = col[present[0]]
    col[: present[0]] = first_val
    missing[:] = False
    return True


def fill_and_assemble(grids, variable_names) -> TrainingTensor:
    """Fill each day's gaps and stack the days into a training tensor.

    Missing cells take the previous second's value; leading gaps take
    the first observed value.  Days are ordered by date, so the caller's
    file ordering never matters.  A variable absent for a whole day
    cannot be filled and aborts assembly.
    """
    grids = list(grids)
    if len(grids) < 2:
        raise ValueError("need at least 2 day grids")
    names = tuple(variable_names)
    shape = grids[0].matrix.shape
    if len(names) != shape[1]:
        raise ValueError("variable_names length does not match grids")
    seen: set[date] = set()
    for g in grids:
        if g.matrix.shape != shape:
            raise ValueError(
                "day %s has shape %r, expected %r"
                % (g.day_id, g.matrix.shape, shape)
            )
        if g.day_id in seen:
            raise ValueError("duplicate day %s" % g.day_id)
        seen.add(g.day_id)
    grids.sort(key=lambda g: g.day_id)
    x = np.empty((len(grids), shape[0], shape[1]), dtype=np.float64)
    for i, g in enumerate(grids):
        matrix = g.matrix.copy()
        mask = g.missing_mask.copy()
        for j in range(shape[1]):
            if not _fill_column(matrix[:, j], mask[:, j]):
                raise UnfillableError(g.day_id, names[j])
        x[i] = matrix
    return TrainingTensor(
        x=np.ascontiguousarray(x),
        day_ids=tuple(g.day_id for g in grids),
        variable_names=names,
    )


def _offset_suffix(tz_offset: timedelta) -> str:
    total = int(tz_offset.total_seconds())
    if total == 0:
        return "Z"
    sign = "+" if total >= 0 else "-"
    total = abs(total)
    return "%s%02d:%02d" % (sign, total // 3600, (total % 3600) // 60)


def format_timestamp(day_id: date, k: int, tz_offset: timedelta = timedelta(0)) -> str:
    """ISO-8601 timestamp of second ``k`` on ``day_id`` under the offset."""
    return "%sT%02d:%02d:%02d%s" % (
        day_id.isoformat(),
        k // 3600,
        (k % 3600) // 60,
        k % 60,
        _offset_suffix(tz_offset),
    )


def write_log_csv(
    fileobj,
    day_id: date,
    matrix,
    variable_names,
    *,
    missing_mask=None,
    tz_offset: timedelta = timedelta(0),
) -> None:
    """Write one day of data in the log CSV profile.

    Values are written with shortest round-trip float formatting, so a
    write -> parse cycle reproduces the exact same doubles.
    """
    m = np.asarray(matrix, dtype=np.float64)
    names = tuple(variable_names)
    fileobj.write("timestamp," + ",".join(names) + "\n")
    suffix = _offset_suffix(tz_offset)
    base = day_id.isoformat()
    for k in range(m.shape[0]):
        ts = "%sT%02d:%02d:%02d%s" % (
            base, k // 3600, (k % 3600) // 60, k % 60, suffix,
        )
        cells = []
        for j in range(m.shape[1]):
            if missing_mask is not None and missing_mask[k, j]:
                cells.append("NaN")
            else:
                cells.append(repr(float(m[k, j])))
        fileobj.write(ts + "," + ",".join(cells) + "\n")
