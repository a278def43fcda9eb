"""Gumbel-Hougaard copula fitting, tail dependence and peak-load VaR indicators."""

from __future__ import annotations

import warnings
from dataclasses import asdict, dataclass

import numpy as np
from scipy import optimize, stats

ALPHA_MAX = 50.0
DEFAULT_P = 0.95
MODEL_VERSION = 1


class ParameterError(ValueError):
    pass


class CopulaFitError(RuntimeError):
    pass


class NotFittedError(RuntimeError):
    pass


@dataclass(frozen=True)
class PseudoSample:
    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float)
        v = np.asarray(self.v, dtype=float)
        if u.shape != v.shape or u.ndim != 1:
            raise ValueError("u and v must be 1-D and equally long")
        if np.any((u <= 0) | (u >= 1) | (v <= 0) | (v >= 1)):
            raise ValueError("pseudo-observations must lie strictly inside (0, 1)")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)

    @property
    def n(self) -> int:
        return int(self.u.size)


@dataclass(frozen=True)
class GumbelModel:
    alpha: float
    tail_upper: float
    p: float = DEFAULT_P
    var_p: float | None = None
    variable_name: str = ""
    n: int = 0
    season: str = ""

    def to_dict(self) -> dict:
        return {"version": MODEL_VERSION, **asdict(self)}

    @classmethod
    def from_dict(cls, doc: dict) -> GumbelModel:
        if doc.get("version") != MODEL_VERSION:
            raise ValueError(f"unsupported copula document version {doc.get('version')!r}")
        fields = {k: doc[k] for k in ("alpha", "tail_upper", "p", "var_p", "variable_name", "n", "season")}
        return cls(**fields)


class EmpiricalMarginal:
    """Step-function empirical CDF with its left-continuous inverse."""

    def __init__(self, values):
        x = np.sort(np.asarray(values, dtype=float))
        if x.size == 0:
            raise ValueError("empty marginal")
        self.sorted_values = x

    @property
    def n(self) -> int:
        return self.sorted_values.size

    def cdf(self, x):
        return np.searchsorted(self.sorted_values, x, side="right") / self.n

    def quantile(self, q):
        q = np.asarray(q, dtype=float)
        # tolerance keeps q = k/n from rounding up to the next order statistic
        k = np.ceil(q * self.n - 1e-9).astype(int)
        return self.sorted_values[np.clip(k - 1, 0, self.n - 1)]


def pseudo_observations(x, y) -> PseudoSample:
    """Average ranks scaled by ``n + 1``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError(f"length mismatch: {x.shape} vs {y.shape}")
    n = x.size
    return PseudoSample(stats.rankdata(x) / (n + 1), stats.rankdata(y) / (n + 1))


def _check_alpha(alpha) -> None:
    if not np.all(np.asarray(alpha) >= 1):
        raise ParameterError(f"Gumbel alpha must be >= 1, got {alpha}")


def gumbel_cdf(u, v, alpha):
    _check_alpha(alpha)
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    with np.errstate(divide="ignore"):
        x = -np.log(u)
        y = -np.log(v)
    s = (x**alpha + y**alpha) ** (1.0 / alpha)
    out = np.exp(-s)
    return out if out.ndim else float(out)


def gumbel_log_density(u, v, alpha):
    """Log of the mixed partial d2C/dudv, computed in log space."""
    _check_alpha(alpha)
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if np.any((u <= 0) | (u >= 1) | (v <= 0) | (v >= 1)):
        raise ValueError("density is defined on the open unit square only")
    lx = np.log(-np.log(u))
    ly = np.log(-np.log(v))
    log_a = np.logaddexp(alpha * lx, alpha * ly)
    w = np.exp(log_a / alpha)
    out = (
        -w
        - np.log(u)
        - np.log(v)
        + (alpha - 1.0) * (lx + ly)
        + (2.0 / alpha - 2.0) * log_a
        + np.log1p((alpha - 1.0) / w)
    )
    return out if out.ndim else float(out)


def upper_tail_dependence(alpha) -> float:
    _check_alpha(alpha)
    return 2.0 - 2.0 ** (1.0 / alpha)


def kendall_tau_alpha(sample: PseudoSample) -> float:
    """Kendall's tau inversion, clamped to [1, ALPHA_MAX]."""
    if sample.n < 10:
        raise ValueError("need at least 10 pairs")
    tau = stats.kendalltau(sample.u, sample.v).statistic
    if not np.isfinite(tau):
        return 1.0
    return alpha_from_tau(tau)


def alpha_from_tau(tau: float) -> float:
    if tau >= 1:
        return ALPHA_MAX
    return float(min(ALPHA_MAX, max(1.0, 1.0 / (1.0 - tau))))


def fit_gumbel_mle(sample: PseudoSample, p: float = DEFAULT_P, **meta) -> GumbelModel:
    """Maximum-likelihood alpha on [1, ALPHA_MAX], bracketed around the tau estimate.

    ``meta`` (variable_name, season, var_p) is copied onto the returned model.
    """
    if sample.n < 100:
        raise ValueError("MLE needs at least 100 pairs")
    tau = stats.kendalltau(sample.u, sample.v).statistic
    if not tau > 0:
        warnings.warn(f"Kendall tau {tau:.4f} <= 0; Gumbel alpha clamped to 1", stacklevel=2)
        return GumbelModel(1.0, 0.0, p=p, n=sample.n, **meta)
    alpha0 = alpha_from_tau(tau)

    def nll(alpha):
        return -float(np.sum(gumbel_log_density(sample.u, sample.v, alpha)))

    def maximize(lo, hi):
        res = optimize.minimize_scalar(nll, bounds=(lo, hi), method="bounded",
                                       options={"xatol": 1e-6})
        if not (res.success and np.isfinite(res.fun)):
            raise CopulaFitError(f"likelihood maximization failed on [{lo:.3f}, {hi:.3f}]")
        return float(res.x)

    lo, hi = max(1.0, alpha0 / 1.5), min(ALPHA_MAX, alpha0 * 1.5)
    best = maximize(lo, hi)
    # an optimum pinned to an inner bracket edge means the bracket missed it
    if (lo > 1.0 and best - lo < 1e-4) or (hi < ALPHA_MAX and hi - best < 1e-4):
        best = maximize(1.0, ALPHA_MAX)
    for cap in (1.0, ALPHA_MAX):
        if nll(cap) <= nll(best):
            best = cap
    alpha = float(best)
    return GumbelModel(alpha, upper_tail_dependence(alpha), p=p, n=sample.n, **meta)


def diagonal_level(alpha: float, p: float) -> float:
    """The u solving C(u, u; alpha) = p, i.e. p ** (2 ** (-1 / alpha))."""
    _check_alpha(alpha)
    if not 0.5 < p < 1:
        raise ParameterError(f"p must lie in (0.5, 1), got {p}")
    return p ** (2.0 ** (-1.0 / alpha))


def var_threshold(model: GumbelModel, marginal: EmpiricalMarginal, p: float | None = None) -> float:
    if model is None or not np.isfinite(getattr(model, "alpha", np.nan)):
        raise NotFittedError("copula model has not been fitted")
    level = diagonal_level(model.alpha, model.p if p is None else p)
    return float(marginal.quantile(level))


def indicator_series(values, threshold: float) -> np.ndarray:
    return (np.asarray(values, dtype=float) >= threshold).astype(float)


def fit_pair(load, other, variable_name: str, p: float = DEFAULT_P, season: str = "") -> GumbelModel:
    """Fit load vs ``other`` and attach the raw-unit VaR threshold of ``other``."""
    sample = pseudo_observations(load, other)
    model = fit_gumbel_mle(sample, p=p, variable_name=variable_name, season=season)
    var = var_threshold(model, EmpiricalMarginal(other))
    return GumbelModel(model.alpha, model.tail_upper, p, var, variable_name, model.n, season)


def copula_exceedance(alpha: float, level: float) -> float:
    """P(U > level, V > level) under the Gumbel copula."""
    return 1.0 - 2.0 * level + gumbel_cdf(level, level, alpha)


def peak_indicators(temperature, price, models: tuple[GumbelModel, GumbelModel]) -> np.ndarray:
    temp_model, price_model = models
    for m in models:
        if m.var_p is None:
            raise NotFittedError(f"copula model {m.variable_name!r} has no VaR threshold")
    return np.column_stack([
        indicator_series(temperature, temp_model.var_p),
        indicator_series(price, price_model.var_p),
    ])


def table_rows(models) -> list[dict]:
    return [
        {"variable": m.variable_name, "alpha": m.alpha, "tail_upper": m.tail_upper,
         "p": m.p, "var_raw": m.var_p, "n": m.n, "season": m.season}
        for m in models
    ]
