"""Forecast metrics, recursive multi-step forecasting and the seasonal experiment harness.

MAPE divides by the actual load while the hit indicator divides by the
prediction.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import baselines, dbn
from .copula import GumbelModel, fit_pair, peak_indicators
from .ingest import (
    EXOG_COLUMNS,
    HOUR,
    LAGS,
    MAX_LAG,
    RecordSeries,
    SplitSpec,
    WindowError,
    build_features,
    hour_of_day,
    split_seasonal,
)
from .seeding import child_seed

DEFAULT_HR_TOL = 0.07
PEAK_WINDOWS = {"spring": (8, 12), "winter": (8, 12), "summer": (12, 17), "fall": (12, 17)}
MODEL_KINDS = ("copula_dbn", "dbn", "nn", "elm")
RESULT_COLUMNS = ("season", "algorithm", "horizon", "window", "mape", "rmse_mw", "hr_pct", "n", "seed")


class MetricDomainError(ValueError):
    pass


@dataclass(frozen=True)
class MetricsReport:
    mape: float
    rmse: float
    hr: float
    n: int
    horizon: str = ""
    window: str = "all"


@dataclass(frozen=True)
class ForecastTrace:
    timestamps: np.ndarray
    predicted: np.ndarray
    actual: np.ndarray

    def __post_init__(self):
        ts = np.asarray(self.timestamps, dtype="datetime64[h]")
        pred = np.asarray(self.predicted, dtype=float)
        act = np.asarray(self.actual, dtype=float)
        if not ts.shape == pred.shape == act.shape:
            raise ValueError("trace columns must have equal lengths")
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "predicted", pred)
        object.__setattr__(self, "actual", act)

    def __len__(self) -> int:
        return int(self.timestamps.size)

    def take(self, mask) -> ForecastTrace:
        return ForecastTrace(self.timestamps[mask], self.predicted[mask], self.actual[mask])


def compute_metrics(predicted, actual, hr_tol: float = DEFAULT_HR_TOL,
                    horizon: str = "", window: str = "all") -> MetricsReport:
    o = np.asarray(predicted, dtype=float)
    t = np.asarray(actual, dtype=float)
    if o.shape != t.shape or o.ndim != 1 or o.size == 0:
        raise ValueError("predicted and actual must be equally long, non-empty 1-D series")
    for name, arr in (("actual", t), ("predicted", o)):
        zero = np.flatnonzero(arr == 0)
        if zero.size:
            raise MetricDomainError(f"{name} value is zero at index {int(zero[0])}")
    mape = float(np.mean(np.abs((o - t) / t)))
    rmse = float(np.sqrt(np.mean((o - t) ** 2)))
    hr = float(np.mean(np.abs((o - t) / o) <= hr_tol))
    return MetricsReport(mape, rmse, hr, int(o.size), horizon, window)


def model_width(model) -> int:
    return 14 if model.with_indicators else 12


def forecast_horizon(model, series: RecordSeries, copula_models, start, hours: int) -> ForecastTrace:
    """Recursive hourly forecast from ``start``.

    Exogenous variables are read from ``series`` over the whole window; lag
    slots that fall at or after ``start`` take earlier predictions.
    """
    start = np.datetime64(start, "h")
    if hours < 1:
        raise ValueError("hours must be positive")
    first = start - MAX_LAG * HOUR
    window = series.window(first, start + hours * HOUR)
    expected = first + np.arange(MAX_LAG + hours) * HOUR
    if len(window) != expected.size or np.any(window.timestamps != expected):
        raise WindowError(f"series must be contiguous from {first} to {start + (hours - 1) * HOUR}")
    use_indicators = model_width(model) == 14
    if use_indicators:
        if copula_models is None:
            raise ValueError("an indicator model needs the fitted copula models")
        indicators = peak_indicators(window.temperature, window.price, copula_models)
    exog = np.column_stack([window.column(c) for c in EXOG_COLUMNS])
    loads = window.load.copy()
    preds = np.empty(hours)
    for i in range(hours):
        row = MAX_LAG + i
        lags = [loads[row - k] for k in LAGS]
        x = np.concatenate([exog[row], lags, indicators[row] if use_indicators else []])
        preds[i] = model.predict(x[None, :])[0]
        loads[row] = preds[i]
    return ForecastTrace(expected[MAX_LAG:], preds, window.load[MAX_LAG:])


def peak_mask(timestamps, season: str) -> np.ndarray:
    lo, hi = PEAK_WINDOWS[season]
    hod = hour_of_day(timestamps)
    return (hod >= lo) & (hod < hi)


def peak_window_eval(trace: ForecastTrace, season: str, hr_tol: float = DEFAULT_HR_TOL,
                     horizon: str = "") -> MetricsReport:
    if season not in PEAK_WINDOWS:
        raise ValueError(f"unknown season {season!r}")
    if len(trace) < 24:
        raise WindowError("peak-window evaluation needs at least one day of trace")
    mask = peak_mask(trace.timestamps, season)
    if not mask.any():
        raise WindowError("trace has no hours in the peak window")
    sub = trace.take(mask)
    return compute_metrics(sub.predicted, sub.actual, hr_tol, horizon, "peak")


def write_trace_csv(trace: ForecastTrace, path) -> None:
    with open(Path(path), "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["timestamp", "predicted_mw", "actual_mw"])
        for ts, o, t in zip(np.datetime_as_string(trace.timestamps, unit="h"), trace.predicted, trace.actual):
            writer.writerow([ts + ":00:00", repr(float(o)), repr(float(t))])


def read_trace_csv(path) -> ForecastTrace:
    with open(Path(path), newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    return ForecastTrace(
        np.array([np.datetime64(r["timestamp"][:13], "h") for r in rows], dtype="datetime64[h]"),
        np.array([float(r["predicted_mw"]) for r in rows]),
        np.array([float(r["actual_mw"]) for r in rows]),
    )


# --- experiment harness -------------------------------------------------------

@dataclass(frozen=True)
class ResultRow:
    season: str
    algorithm: str
    horizon: str
    anchor: np.datetime64
    metrics: MetricsReport
    seed: int
    indicators: bool

    @property
    def window(self) -> str:
        return self.metrics.window

    def as_csv(self) -> list:
        m = self.metrics
        return [self.season, self.algorithm, self.horizon, m.window, f"{m.mape:.6f}",
                f"{m.rmse:.4f}", f"{100 * m.hr:.4f}", m.n, self.seed]


@dataclass
class ExperimentResult:
    rows: list = field(default_factory=list)
    traces: dict = field(default_factory=dict)
    copulas: tuple | None = None


def fit_copulas(history: RecordSeries, p: float, season: str = "") -> tuple[GumbelModel, GumbelModel]:
    return (
        fit_pair(history.load, history.temperature, "temperature", p, season),
        fit_pair(history.load, history.price, "price", p, season),
    )


def train_model(kind: str, train_rows, cfg: dbn.TrainConfig, architecture=None, elm_hidden: int = 30):
    if kind in ("copula_dbn", "dbn"):
        return dbn.train_dbn(train_rows, architecture, cfg)
    if kind == "nn":
        return baselines.train_mlp(train_rows, architecture, cfg)
    if kind == "elm":
        return baselines.train_elm(train_rows, elm_hidden, cfg.seed)
    raise ValueError(f"unknown model kind {kind!r}; choose from {MODEL_KINDS}")


def uses_indicators(kind: str) -> bool:
    return kind == "copula_dbn"


def run_experiment(dataset: RecordSeries, spec: SplitSpec, kinds=MODEL_KINDS,
                   cfg: dbn.TrainConfig | None = None, p: float = 0.95,
                   hr_tol: float = DEFAULT_HR_TOL, hidden_widths=(30, 30, 30),
                   elm_hidden: int = 30) -> ExperimentResult:
    """Train every model kind on the window before ``spec.anchor`` and forecast after it.

    Copulas are fitted on all records before the anchor. Each model gets a
    child seed derived from the master seed in ``cfg`` and its kind, so adding
    or removing kinds leaves the others unchanged.
    """
    cfg = dbn.TrainConfig() if cfg is None else cfg
    train_part, _ = split_seasonal(dataset, spec)
    history = dataset.window(dataset.timestamps[0], spec.anchor)
    copulas = fit_copulas(history, p, spec.season)
    indicators = peak_indicators(dataset.temperature, dataset.price, copulas)
    train_start, train_stop = train_part.timestamps[0], spec.anchor
    result = ExperimentResult(copulas=copulas)
    for kind in kinds:
        with_ind = uses_indicators(kind)
        features = build_features(dataset, indicators if with_ind else None)
        train_rows = features.window(train_start, train_stop)
        if len(train_rows) == 0:
            raise WindowError(f"no complete feature rows in the training window before {spec.anchor}")
        seed = child_seed(cfg.seed, f"model/{kind}")
        kind_cfg = dbn.TrainConfig(**{**cfg.__dict__, "seed": seed})
        architecture = (14 if with_ind else 12,) + tuple(hidden_widths) + (1,)
        model = train_model(kind, train_rows, kind_cfg, architecture, elm_hidden)
        trace = forecast_horizon(model, dataset, copulas if with_ind else None, spec.anchor,
                                 spec.validation_hours)
        result.traces[kind] = trace
        reports = (
            compute_metrics(trace.predicted, trace.actual, hr_tol, spec.horizon, "all"),
            peak_window_eval(trace, spec.season, hr_tol, spec.horizon),
        )
        for report in reports:
            result.rows.append(ResultRow(spec.season, kind, spec.horizon, spec.anchor, report,
                                         cfg.seed, with_ind))
    return result


def write_results_csv(rows, path) -> None:
    with open(Path(path), "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RESULT_COLUMNS)
        for row in rows:
            writer.writerow(row.as_csv())
