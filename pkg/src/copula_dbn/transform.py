"""Box-Cox normalization, normality tests and min-max scaling."""

from __future__ import annotations

import csv
import functools
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import log_ndtr, ndtr

LAMBDA_GRID = np.round(np.arange(-200, 201) * 0.01, 2)
SHIFT_EPS = 1e-6
DEFAULT_LILLIEFORS_REPS = 5000


class DomainError(ValueError):
    pass


class DegenerateSampleError(ValueError):
    pass


class EstimationError(ValueError):
    pass


@dataclass(frozen=True)
class BoxCoxParams:
    lam: float
    shift: float = 0.0

    def __post_init__(self):
        if self.shift < 0:
            raise ValueError("shift must be non-negative")


@dataclass(frozen=True)
class NormalityResult:
    statistic: float
    p_value: float


@dataclass(frozen=True)
class ScaleParams:
    min: float
    max: float

    def __post_init__(self):
        if not self.max > self.min:
            raise DegenerateSampleError(f"scale needs max > min, got [{self.min}, {self.max}]")

    def apply(self, values):
        return (np.asarray(values, dtype=float) - self.min) / (self.max - self.min)

    def invert(self, scaled):
        return np.asarray(scaled, dtype=float) * (self.max - self.min) + self.min


def box_cox(values, params: BoxCoxParams):
    y = np.asarray(values, dtype=float) + params.shift
    if np.any(~(y > 0)):
        raise DomainError("Box-Cox needs strictly positive shifted values")
    if params.lam == 0:
        return np.log(y)
    return np.expm1(params.lam * np.log(y)) / params.lam


def inverse_box_cox(values, params: BoxCoxParams):
    v = np.asarray(values, dtype=float)
    if params.lam == 0:
        return np.exp(v) - params.shift
    base = params.lam * v + 1.0
    if np.any(~(base > 0)):
        raise DomainError("inverse Box-Cox needs lam * v + 1 > 0")
    return np.exp(np.log1p(params.lam * v) / params.lam) - params.shift


def _standardize(sample) -> np.ndarray:
    x = np.asarray(sample, dtype=float)
    if x.ndim != 1 or x.size < 8:
        raise ValueError("normality tests need a 1-D sample of at least 8 values")
    sd = x.std(ddof=1)
    if not sd > 0 or not np.isfinite(sd):
        raise DegenerateSampleError("sample has zero variance")
    return np.sort((x - x.mean()) / sd)


def _ad_pvalue(a2_star):
    """Case-3 (mean and variance estimated) p-value of D'Agostino and Stephens."""
    # the upper branch turns back up past its minimum near 153; p is ~1e-190 there
    a = np.minimum(np.asarray(a2_star, dtype=float), 153.0)
    p = np.where(
        a >= 0.6,
        np.exp(1.2937 - 5.709 * a + 0.0186 * a**2),
        np.where(
            a >= 0.34,
            np.exp(0.9177 - 4.279 * a - 1.38 * a**2),
            np.where(
                a >= 0.2,
                1 - np.exp(-8.318 + 42.796 * a - 59.938 * a**2),
                1 - np.exp(-13.436 + 101.14 * a - 223.73 * a**2),
            ),
        ),
    )
    return np.where(a >= 153.0, 0.0, np.clip(p, 0.0, 1.0))


def _ad_statistic(z_sorted: np.ndarray) -> np.ndarray:
    """A^2 along the last axis of already standardized, sorted samples."""
    n = z_sorted.shape[-1]
    i = np.arange(1, n + 1)
    terms = (2 * i - 1) * (log_ndtr(z_sorted) + log_ndtr(-z_sorted[..., ::-1]))
    return -n - terms.sum(axis=-1) / n


def anderson_darling(sample) -> NormalityResult:
    z = _standardize(sample)
    n = z.size
    a2 = float(_ad_statistic(z))
    a2_star = a2 * (1 + 0.75 / n + 2.25 / n**2)
    return NormalityResult(a2, float(_ad_pvalue(a2_star)))


def jarque_bera(sample) -> NormalityResult:
    x = np.asarray(sample, dtype=float)
    _standardize(x)
    d = x - x.mean()
    m2 = np.mean(d**2)
    skew = np.mean(d**3) / m2**1.5
    kurt = np.mean(d**4) / m2**2 - 3.0
    jb = x.size / 6.0 * (skew**2 + kurt**2 / 4.0)
    # chi-square(2) survival function
    return NormalityResult(float(jb), float(math.exp(-jb / 2.0)))


def _ks_distance(z_sorted: np.ndarray) -> np.ndarray:
    n = z_sorted.shape[-1]
    cdf = ndtr(z_sorted)
    i = np.arange(1, n + 1)
    d_plus = np.max(i / n - cdf, axis=-1)
    d_minus = np.max(cdf - (i - 1) / n, axis=-1)
    return np.maximum(d_plus, d_minus)


@functools.lru_cache(maxsize=64)
def _lilliefors_null(n: int, mc_reps: int, seed: int) -> np.ndarray:
    # the statistic is location/scale free, so the null depends on n only
    rng = np.random.default_rng(seed)
    out = np.empty(mc_reps)
    chunk = max(1, 2_000_000 // n)
    for start in range(0, mc_reps, chunk):
        stop = min(mc_reps, start + chunk)
        sims = rng.standard_normal((stop - start, n))
        sims = (sims - sims.mean(axis=1, keepdims=True)) / sims.std(axis=1, ddof=1, keepdims=True)
        out[start:stop] = _ks_distance(np.sort(sims, axis=1))
    out.flags.writeable = False
    return out


def lilliefors(sample, mc_reps: int = DEFAULT_LILLIEFORS_REPS, seed: int = 0) -> NormalityResult:
    """KS test against a normal with estimated mean and variance.

    The p-value is the fraction of ``mc_reps`` simulated null statistics that
    are at least the observed one.
    """
    if mc_reps < 1000:
        raise ValueError("mc_reps must be at least 1000")
    z = _standardize(sample)
    d = float(_ks_distance(z))
    null = _lilliefors_null(z.size, int(mc_reps), int(seed))
    return NormalityResult(d, float(np.mean(null >= d)))


def default_shift(sample) -> float:
    return max(0.0, SHIFT_EPS - float(np.min(sample)))


def lambda_scores(sample, shift: float = 0.0, grid=LAMBDA_GRID) -> np.ndarray:
    """A-D p-value of the Box-Cox transformed sample for every grid lambda."""
    y = np.asarray(sample, dtype=float) + shift
    logy = np.log(y)
    grid = np.asarray(grid, dtype=float)
    with np.errstate(over="ignore", invalid="ignore"):
        transformed = np.where(
            grid[:, None] == 0,
            logy[None, :],
            np.expm1(grid[:, None] * logy[None, :]) / np.where(grid == 0, 1.0, grid)[:, None],
        )
    n = y.size
    mean = transformed.mean(axis=1, keepdims=True)
    sd = transformed.std(axis=1, ddof=1, keepdims=True)
    scores = np.zeros(grid.size)
    good = (sd[:, 0] > 0) & np.all(np.isfinite(transformed), axis=1)
    z = np.sort((transformed[good] - mean[good]) / sd[good], axis=1)
    a2_star = _ad_statistic(z) * (1 + 0.75 / n + 2.25 / n**2)
    scores[good] = _ad_pvalue(a2_star)
    return scores


def estimate_lambda(sample, fraction: float | None = None, seed: int = 0) -> BoxCoxParams:
    """Pick the grid lambda whose transform of ``sample`` looks most normal under the A-D test.

    With ``fraction`` set, the search runs on a seeded random share of the
    sample instead (at least 20 values).
    """
    x = np.asarray(sample, dtype=float)
    if x.ndim != 1 or x.size < 20:
        raise EstimationError("lambda estimation needs at least 20 values")
    if not np.all(np.isfinite(x)):
        raise EstimationError("sample contains non-finite values")
    shift = default_shift(x)
    if fraction is not None:
        m = min(x.size, max(20, int(round(fraction * x.size))))
        x = np.random.default_rng(seed).choice(x, size=m, replace=False)
    scores = lambda_scores(x, shift)
    if not np.any(scores > 0):
        raise EstimationError("no lambda on the grid gives a usable transform")
    return BoxCoxParams(float(LAMBDA_GRID[int(np.argmax(scores))]), shift)


def minmax_scale(values) -> tuple[np.ndarray, ScaleParams]:
    v = np.asarray(values, dtype=float)
    params = ScaleParams(float(v.min()), float(v.max()))
    return params.apply(v), params


def minmax_unscale(scaled, params: ScaleParams) -> np.ndarray:
    return params.invert(scaled)


@dataclass(frozen=True)
class NormalityRow:
    variable: str
    lam: float
    p_ad: float
    p_jb: float
    p_lilliefors: float


def normality_report(columns: dict, fraction: float = 0.1, seed: int = 0,
                     mc_reps: int = DEFAULT_LILLIEFORS_REPS) -> list[NormalityRow]:
    """Box-Cox each column, then run all three tests on the full transformed data.

    Lambda is searched on a seeded random ``fraction`` of each column; the
    tests then see every value.
    """
    rows = []
    for name, values in columns.items():
        params = estimate_lambda(values, fraction=fraction, seed=seed)
        y = box_cox(values, params)
        rows.append(NormalityRow(
            name,
            params.lam,
            anderson_darling(y).p_value,
            jarque_bera(y).p_value,
            lilliefors(y, mc_reps=mc_reps, seed=seed).p_value,
        ))
    return rows


def write_normality_csv(rows: list[NormalityRow], path) -> None:
    with open(Path(path), "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["variable", "lambda", "p_AD", "p_JB", "p_Lilliefors"])
        for r in rows:
            writer.writerow([r.variable, f"{r.lam:.2f}", f"{r.p_ad:.6f}", f"{r.p_jb:.6f}",
                             f"{r.p_lilliefors:.6f}"])
