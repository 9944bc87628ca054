"""Loading and cleaning multivariate historical series from CSV.

Missing cells (empty or the literal ``NA``) are carried as NaN until
:func:`align_and_clean` removes them or rejects the dataset.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConfigError, DataError
from .io_utils import atomic_write_text, fmt_float

MISSING_SENTINELS = frozenset({"", "NA"})
TIMESTAMP_HEADERS = frozenset({"timestamp", "time", "t", "datetime", "date"})


@dataclass(frozen=True)
class Dataset:
    variable_names: tuple[str, ...]
    rows: np.ndarray  # (n_obs, n_vars); NaN marks a missing cell
    timestamps: tuple[str, ...] | None = None

    def __post_init__(self):
        names = tuple(self.variable_names)
        object.__setattr__(self, "variable_names", names)
        rows = np.array(self.rows, dtype=float, copy=True)
        if rows.ndim != 2 or rows.shape[1] != len(names):
            raise DataError(
                f"rows must be an n_obs x {len(names)} matrix, got shape {rows.shape}"
            )
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)
        if any(not n for n in names):
            raise DataError("variable names must be non-empty")
        if len(set(names)) != len(names):
            raise DataError(f"duplicate variable names in {list(names)}")
        if np.isinf(rows).any():
            raise DataError("rows contain infinite values")
        if self.timestamps is not None:
            ts = tuple(self.timestamps)
            object.__setattr__(self, "timestamps", ts)
            if len(ts) != rows.shape[0]:
                raise DataError("timestamps length does not match the number of rows")

    @property
    def n_obs(self) -> int:
        return self.rows.shape[0]

    @property
    def n_vars(self) -> int:
        return self.rows.shape[1]

    def column(self, name: str) -> np.ndarray:
        try:
            return self.rows[:, self.variable_names.index(name)]
        except ValueError:
            raise DataError(f"unknown variable {name!r}") from None

    def select(self, names: Sequence[str]) -> "Dataset":
        idx = []
        for name in names:
            if name not in self.variable_names:
                raise DataError(f"unknown variable {name!r}")
            idx.append(self.variable_names.index(name))
        return Dataset(tuple(names), self.rows[:, idx], self.timestamps)

    def has_missing(self) -> bool:
        return bool(np.isnan(self.rows).any())


def _parse_float(cell: str) -> float | None:
    if cell in MISSING_SENTINELS:
        return math.nan
    try:
        value = float(cell)
    except ValueError:
        return None
    # float() accepts "nan"/"inf" spellings; only the sentinels may mean missing
    if not math.isfinite(value):
        return None
    return value


def _looks_like_timestamp(cell: str) -> bool:
    if _parse_float(cell) is not None:
        return False
    try:
        datetime.fromisoformat(cell)
    except ValueError:
        return False
    return True


def _parse_instant(cell: str, lineno: int) -> datetime:
    try:
        return datetime.fromisoformat(cell)
    except ValueError:
        raise DataError(f"row {lineno}: invalid ISO-8601 timestamp {cell!r}") from None


def load_timeseries_csv(path, schema: Sequence[str] | str = "infer") -> Dataset:
    """Read a header-first CSV into a :class:`Dataset`.

    The first column is taken as a timestamp column when its header is a
    conventional time name (``timestamp``, ``t``, ...) or its first cell
    parses as an ISO-8601 instant rather than a number. ``schema`` is either
    ``"infer"`` or the exact list of expected variable columns.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"input file not found: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        records = [r for r in csv.reader(fh) if r]
    if not records:
        raise DataError(f"{path}: empty file, a header row is required")
    header = [h.strip() for h in records[0]]
    body = records[1:]

    has_ts = False
    if header and header[0].lower() in TIMESTAMP_HEADERS:
        has_ts = True
    elif body and header and _looks_like_timestamp(body[0][0].strip()):
        has_ts = True
    names = header[1:] if has_ts else header

    if schema != "infer":
        expected = list(schema)
        if list(names) != expected:
            raise ConfigError(f"{path}: header {names} does not match schema {expected}")

    width = len(header)
    values = np.empty((len(body), len(names)))
    stamps: list[str] = []
    for r, record in enumerate(body):
        lineno = r + 2
        if len(record) != width:
            raise DataError(
                f"{path}: row {lineno} has {len(record)} cells, expected {width}"
            )
        cells = [c.strip() for c in record]
        if has_ts:
            stamps.append(cells[0])
            cells = cells[1:]
        for c, cell in enumerate(cells):
            v = _parse_float(cell)
            if v is None:
                raise DataError(
                    f"{path}: row {lineno}, column {names[c]!r}: cannot parse {cell!r} as a number"
                )
            values[r, c] = v

    timestamps = None
    if has_ts:
        instants = [_parse_instant(s, i + 2) for i, s in enumerate(stamps)]
        for i in range(1, len(instants)):
            if not instants[i] > instants[i - 1]:
                raise DataError(f"{path}: timestamps not strictly increasing at row {i + 2}")
        timestamps = tuple(stamps)
    try:
        return Dataset(tuple(names), values, timestamps)
    except DataError as exc:
        raise DataError(f"{path}: {exc}") from None


def align_and_clean(d: Dataset, policy: str = "drop_row") -> tuple[Dataset, int]:
    """Apply the missing-value policy; return the clean dataset and rows dropped."""
    if policy not in ("drop_row", "fail"):
        raise ConfigError(f"unknown missing-value policy {policy!r}")
    missing = np.isnan(d.rows).any(axis=1)
    if missing.any():
        if policy == "fail":
            r = int(np.flatnonzero(missing)[0])
            c = int(np.flatnonzero(np.isnan(d.rows[r]))[0])
            raise DataError(
                f"missing value at data row {r + 1} (column {d.variable_names[c]!r})"
            )
        keep = ~missing
        ts = None
        if d.timestamps is not None:
            ts = tuple(t for t, k in zip(d.timestamps, keep) if k)
        out = Dataset(d.variable_names, d.rows[keep], ts)
    else:
        out = d
    if out.n_obs < 2:
        raise DataError(f"only {out.n_obs} usable rows after cleaning; at least 2 required")
    return out, int(missing.sum())


def write_dataset_csv(d: Dataset, path) -> None:
    """Write a dataset so that :func:`load_timeseries_csv` reads it back bit-exactly."""
    lines = []
    header = list(d.variable_names)
    if d.timestamps is not None:
        header = ["timestamp"] + header
    lines.append(",".join(header))
    for i, row in enumerate(d.rows):
        cells = ["" if math.isnan(v) else fmt_float(v) for v in row]
        if d.timestamps is not None:
            cells.insert(0, d.timestamps[i])
        lines.append(",".join(cells))
    atomic_write_text(path, "\n".join(lines) + "\n")


__all__ = [
    "Dataset",
    "MISSING_SENTINELS",
    "align_and_clean",
    "load_timeseries_csv",
    "write_dataset_csv",
]
