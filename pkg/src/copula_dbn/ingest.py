"""Hourly grid records: CSV parsing, cleaning, lag features and seasonal splits."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path

import numpy as np

HOUR = np.timedelta64(1, "h")
LAGS = (1, 24, 48, 72, 96, 120, 144)
MAX_LAG = max(LAGS)
EXOG_COLUMNS = ("temperature", "price", "humidity", "pressure", "wind_speed")
FIELDS = ("load",) + EXOG_COLUMNS
FEATURE_NAMES = (
    list(EXOG_COLUMNS)
    + [f"load_lag_{k}h" for k in LAGS]
    + ["I_temp", "I_price"]
)
DEFAULT_SCHEMA = {
    "timestamp": "timestamp",
    "load": "load_mw",
    "temperature": "temperature",
    "price": "price",
    "humidity": "humidity",
    "pressure": "pressure",
    "wind_speed": "wind_speed",
}
SEASONS = ("spring", "summer", "fall", "winter")
HORIZONS = ("day_ahead", "week_ahead")
# (train hours, validation hours)
HORIZON_WINDOWS = {"day_ahead": (7 * 24, 24), "week_ahead": (30 * 24, 7 * 24)}


class SchemaError(ValueError):
    pass


class EmptyDataError(ValueError):
    pass


class InsufficientHistoryError(ValueError):
    pass


class WindowError(ValueError):
    pass


@dataclass(frozen=True)
class RowError:
    line: int
    message: str


@dataclass(frozen=True)
class RecordSeries:
    """Column-oriented hourly records; ``timestamps`` is ``datetime64[h]``."""

    timestamps: np.ndarray
    load: np.ndarray
    temperature: np.ndarray
    price: np.ndarray
    humidity: np.ndarray
    pressure: np.ndarray
    wind_speed: np.ndarray

    def __post_init__(self):
        ts = np.asarray(self.timestamps, dtype="datetime64[h]")
        object.__setattr__(self, "timestamps", ts)
        for name in FIELDS:
            col = np.asarray(getattr(self, name), dtype=float)
            if col.shape != ts.shape:
                raise SchemaError(f"column {name!r} has {col.size} values, expected {ts.size}")
            object.__setattr__(self, name, col)
        if ts.size > 1 and np.any(np.diff(ts) <= np.timedelta64(0, "h")):
            raise SchemaError("timestamps must be strictly increasing")

    def __len__(self) -> int:
        return int(self.timestamps.size)

    def take(self, mask_or_index) -> RecordSeries:
        return RecordSeries(
            self.timestamps[mask_or_index],
            *(getattr(self, name)[mask_or_index] for name in FIELDS),
        )

    def window(self, start, stop) -> RecordSeries:
        """Rows with ``start <= timestamp < stop``."""
        start = np.datetime64(start, "h")
        stop = np.datetime64(stop, "h")
        return self.take((self.timestamps >= start) & (self.timestamps < stop))

    def column(self, name: str) -> np.ndarray:
        return getattr(self, name)


@dataclass(frozen=True)
class FeatureMatrix:
    inputs: np.ndarray
    targets: np.ndarray
    timestamps: np.ndarray
    with_indicators: bool = True
    names: tuple = field(default=tuple(FEATURE_NAMES))

    def __post_init__(self):
        width = 14 if self.with_indicators else 12
        inputs = np.asarray(self.inputs, dtype=float).reshape(-1, width)
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "targets", np.asarray(self.targets, dtype=float))
        object.__setattr__(self, "timestamps", np.asarray(self.timestamps, dtype="datetime64[h]"))
        object.__setattr__(self, "names", tuple(FEATURE_NAMES[:width]))
        if self.targets.shape != (inputs.shape[0],) or self.timestamps.shape != self.targets.shape:
            raise SchemaError("inputs, targets and timestamps disagree on row count")

    def __len__(self) -> int:
        return int(self.targets.size)

    def take(self, mask_or_index) -> FeatureMatrix:
        return FeatureMatrix(
            self.inputs[mask_or_index],
            self.targets[mask_or_index],
            self.timestamps[mask_or_index],
            self.with_indicators,
        )

    def window(self, start, stop) -> FeatureMatrix:
        start = np.datetime64(start, "h")
        stop = np.datetime64(stop, "h")
        return self.take((self.timestamps >= start) & (self.timestamps < stop))


@dataclass(frozen=True)
class SplitSpec:
    season: str
    horizon: str
    anchor: np.datetime64

    def __post_init__(self):
        if self.season not in SEASONS:
            raise ValueError(f"unknown season {self.season!r}")
        if self.horizon not in HORIZONS:
            raise ValueError(f"unknown horizon {self.horizon!r}")
        object.__setattr__(self, "anchor", np.datetime64(self.anchor, "h"))

    @classmethod
    def at(cls, anchor, horizon: str) -> SplitSpec:
        anchor = np.datetime64(anchor, "h")
        return cls(season_of(anchor), horizon, anchor)

    @property
    def train_hours(self) -> int:
        return HORIZON_WINDOWS[self.horizon][0]

    @property
    def validation_hours(self) -> int:
        return HORIZON_WINDOWS[self.horizon][1]


def season_of(when) -> str:
    """Meteorological season of a timestamp."""
    month = int(str(np.datetime64(when, "M"))[5:7])
    if month in (3, 4, 5):
        return "spring"
    if month in (6, 7, 8):
        return "summer"
    if month in (9, 10, 11):
        return "fall"
    return "winter"


def hour_of_day(timestamps: np.ndarray) -> np.ndarray:
    ts = np.asarray(timestamps, dtype="datetime64[h]")
    return ((ts - ts.astype("datetime64[D]")) // HOUR).astype(int)


def _parse_timestamp(text: str) -> np.datetime64:
    stamp = datetime.fromisoformat(text.strip())
    if stamp.tzinfo is not None:
        raise ValueError("timezone-aware timestamps are not supported")
    if stamp.minute or stamp.second or stamp.microsecond:
        raise ValueError("timestamp is not on the hour")
    return np.datetime64(stamp, "h")


def parse_csv(path, schema: dict | None = None) -> tuple[RecordSeries, list[RowError]]:
    """Read a records CSV.

    Malformed rows (unparseable or non-finite fields, duplicate timestamps) are
    skipped and reported as :class:`RowError` with their 1-based file line.
    Rows are returned in timestamp order.
    """
    schema = dict(DEFAULT_SCHEMA if schema is None else schema)
    errors: list[RowError] = []
    rows: list[tuple] = []
    with open(Path(path), newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise SchemaError(f"{path}: missing header row")
        header = [h.strip() for h in header]
        missing = [col for col in schema.values() if col not in header]
        if missing:
            raise SchemaError(f"{path}: missing column(s) {', '.join(missing)}")
        pos = {key: header.index(col) for key, col in schema.items()}
        for line, raw in enumerate(reader, start=2):
            if not raw or all(not cell.strip() for cell in raw):
                continue
            try:
                stamp = _parse_timestamp(raw[pos["timestamp"]])
                values = []
                for name in FIELDS:
                    value = float(raw[pos[name]])
                    if not math.isfinite(value):
                        raise ValueError(f"non-finite {name}")
                    values.append(value)
            except (ValueError, IndexError) as exc:
                errors.append(RowError(line, str(exc)))
                continue
            rows.append((stamp, *values, line))
    rows.sort(key=lambda r: r[0])
    kept = []
    for row in rows:
        if kept and kept[-1][0] == row[0]:
            errors.append(RowError(row[-1], f"duplicate timestamp {row[0]}"))
            continue
        kept.append(row)
    errors.sort(key=lambda e: e.line)
    if not kept:
        empty = np.array([], dtype="datetime64[h]")
        return RecordSeries(empty, *([np.array([])] * len(FIELDS))), errors
    cols = list(zip(*kept))
    series = RecordSeries(np.array(cols[0], dtype="datetime64[h]"), *(np.array(c) for c in cols[1:-1]))
    return series, errors


def write_csv(series: RecordSeries, path, schema: dict | None = None, digits: int = 6) -> None:
    schema = dict(DEFAULT_SCHEMA if schema is None else schema)
    fmt = f"{{:.{digits}f}}"
    with open(Path(path), "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([schema["timestamp"]] + [schema[name] for name in FIELDS])
        stamps = np.datetime_as_string(series.timestamps, unit="h")
        cols = [series.column(name) for name in FIELDS]
        for i, stamp in enumerate(stamps):
            writer.writerow([stamp + ":00:00"] + [fmt.format(c[i]) for c in cols])


def clean(series: RecordSeries) -> RecordSeries:
    """Drop rows with non-finite fields or non-positive load."""
    keep = series.load > 0
    for name in FIELDS:
        keep &= np.isfinite(series.column(name))
    if not keep.any():
        raise EmptyDataError("no valid rows remain after cleaning")
    if keep.all():
        return series
    return series.take(keep)


def build_features(series: RecordSeries, indicators=None) -> FeatureMatrix:
    """Lagged feature rows for every timestamp with a complete 144 h history.

    ``indicators`` is an ``(n, 2)`` array of (I_temp, I_price) aligned with
    ``series``; pass ``None`` for the 12-input layout without indicators.
    """
    n = len(series)
    if n <= MAX_LAG:
        raise InsufficientHistoryError(f"need more than {MAX_LAG} hourly rows, got {n}")
    if indicators is not None:
        indicators = np.asarray(indicators, dtype=float)
        if indicators.shape != (n, 2):
            raise SchemaError(f"indicators must have shape ({n}, 2), got {indicators.shape}")
        if not np.all((indicators == 0) | (indicators == 1)):
            raise SchemaError("indicators must be binary")
    hours = series.timestamps.astype("int64")
    # strictly increasing hours spanning exactly MAX_LAG over MAX_LAG rows means
    # no gap inside the lag window, so lag k sits k rows back
    ok = np.zeros(n, dtype=bool)
    ok[MAX_LAG:] = hours[MAX_LAG:] - hours[:-MAX_LAG] == MAX_LAG
    idx = np.flatnonzero(ok)
    if idx.size == 0:
        raise InsufficientHistoryError(f"no timestamp has a contiguous {MAX_LAG} h lag history")
    blocks = [np.column_stack([series.column(c)[idx] for c in EXOG_COLUMNS])]
    blocks.append(np.column_stack([series.load[idx - k] for k in LAGS]))
    if indicators is not None:
        blocks.append(indicators[idx])
    return FeatureMatrix(
        np.hstack(blocks),
        series.load[idx],
        series.timestamps[idx],
        with_indicators=indicators is not None,
    )


def split_seasonal(series: RecordSeries, spec: SplitSpec) -> tuple[RecordSeries, RecordSeries]:
    anchor = spec.anchor
    train_start = anchor - spec.train_hours * HOUR
    val_stop = anchor + spec.validation_hours * HOUR
    if len(series) == 0:
        raise WindowError("empty series")
    if train_start < series.timestamps[0] or val_stop - HOUR > series.timestamps[-1]:
        raise WindowError(
            f"series {series.timestamps[0]}..{series.timestamps[-1]} does not cover "
            f"{train_start}..{val_stop - HOUR}"
        )
    return series.window(train_start, anchor), series.window(anchor, val_stop)
