"""Seeded synthetic grid data whose load/temperature and load/price ranks are Gumbel-coupled."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .copula import PseudoSample, ParameterError
from .ingest import HOUR, RecordSeries, season_of
from .seeding import rng_for


class ConfigError(ValueError):
    pass


def positive_stable(a: float, size: int, rng: np.random.Generator) -> np.ndarray:
    """Chambers-Mallows-Stuck draws with Laplace transform exp(-t**a), 0 < a <= 1."""
    if a == 1.0:
        return np.ones(size)
    theta = rng.uniform(0.0, np.pi, size)
    w = rng.exponential(1.0, size)
    return (np.sin(a * theta) / np.sin(theta) ** (1.0 / a)) * (np.sin((1.0 - a) * theta) / w) ** ((1.0 - a) / a)


def sample_gumbel_pairs(alpha: float, n: int, seed: int) -> PseudoSample:
    """Marshall-Olkin sampling: shared positive-stable frailty, two unit exponentials."""
    if alpha < 1:
        raise ParameterError(f"Gumbel alpha must be >= 1, got {alpha}")
    if n < 1:
        raise ValueError("n must be positive")
    rng = np.random.default_rng(seed)
    s = positive_stable(1.0 / alpha, n, rng)
    e = rng.exponential(1.0, (2, n))
    u = np.exp(-((e / s) ** (1.0 / alpha)))
    # keep strictly inside (0, 1) in floating point
    u = np.clip(u, np.nextafter(0.0, 1.0), np.nextafter(1.0, 0.0))
    return PseudoSample(u[0], u[1])


@dataclass(frozen=True)
class ScenarioConfig:
    alpha_temp: float = 3.52
    alpha_price: float = 1.19
    days: int = 365
    base_load: float = 30000.0
    daily_amp: float = 6000.0
    weekly_amp: float = 2000.0
    noise_sd: float = 600.0
    seed: int = 0
    start: str = "2016-01-01"
    annual_amp: float = 4000.0
    spike_rate: float = 0.25
    spike_size: float = 5000.0

    def __post_init__(self):
        if self.alpha_temp < 1 or self.alpha_price < 1:
            raise ConfigError("copula parameters must be >= 1")
        if self.days < 14:
            raise ConfigError("a scenario needs at least 14 days")
        if self.noise_sd < 0 or self.spike_size < 0 or not 0 <= self.spike_rate <= 1:
            raise ConfigError("noise, spike size and spike rate must be non-negative (rate <= 1)")
        swing = self.daily_amp + self.weekly_amp + self.annual_amp + 6 * self.noise_sd
        if min(self.daily_amp, self.weekly_amp, self.annual_amp) < 0 or swing >= self.base_load:
            raise ConfigError("amplitudes must be non-negative and leave the load positive")


# peak hour of the daily load bump per season
_PEAK_HOUR = {"spring": 10.0, "winter": 10.0, "summer": 14.5, "fall": 14.5}
_PEAK_WINDOW = {"spring": (8, 12), "winter": (8, 12), "summer": (12, 17), "fall": (12, 17)}


def _ar1(rng, n: int, phi: float, sd: float) -> np.ndarray:
    eps = rng.normal(0.0, sd * np.sqrt(1 - phi**2), n)
    out = np.empty(n)
    out[0] = rng.normal(0.0, sd)
    for i in range(1, n):
        out[i] = phi * out[i - 1] + eps[i]
    return out


def _couple(load: np.ndarray, alpha: float, seed: int) -> np.ndarray:
    """Uniforms for a partner variable whose rank copula with ``load`` is a Gumbel sample."""
    pairs = sample_gumbel_pairs(alpha, load.size, seed)
    order = np.argsort(pairs.u, kind="stable")
    out = np.empty(load.size)
    out[np.argsort(load, kind="stable")] = pairs.v[order]
    return out


def gen_scenario(cfg: ScenarioConfig) -> RecordSeries:
    """Hourly load with daily, weekly and annual cycles, AR noise and heat-driven spikes.

    Temperature and price are drawn through Gumbel copulas on the load ranks,
    so the hottest and priciest hours coincide with the load peaks; humidity,
    pressure and wind are weakly related nuisance series.
    """
    n = cfg.days * 24
    start = np.datetime64(cfg.start, "h")
    stamps = start + np.arange(n) * HOUR
    days = stamps.astype("datetime64[D]")
    hour = ((stamps - days) // HOUR).astype(int)
    doy = (days - days.astype("datetime64[Y]")).astype(int)
    dow = (days.astype(int) + 3) % 7  # 1970-01-01 was a Thursday; Monday = 0
    seasons = np.array([season_of(d) for d in days[::24]]).repeat(24)[:n]

    peak = np.array([_PEAK_HOUR[s] for s in seasons])
    bump = np.exp(-0.5 * ((hour - peak) / 3.0) ** 2)
    trough = np.exp(-0.5 * ((hour - 4.0) / 2.5) ** 2)
    daily = cfg.daily_amp * (bump - 0.4 * trough)
    weekly = np.where(dow >= 5, -cfg.weekly_amp, 0.0)
    annual = cfg.annual_amp * np.cos(2 * np.pi * (doy - 200) / 365.0)
    noise = _ar1(rng_for(cfg.seed, "synth/noise"), n, 0.8, cfg.noise_sd)

    spike = np.zeros(n)
    spike_rng = rng_for(cfg.seed, "synth/spikes")
    for d in range(cfg.days):
        if spike_rng.random() >= cfg.spike_rate:
            continue
        lo, hi = _PEAK_WINDOW[seasons[d * 24]]
        first = spike_rng.integers(lo, hi - 1)
        length = spike_rng.integers(2, 4)
        size = cfg.spike_size * spike_rng.uniform(0.7, 1.3)
        span = slice(d * 24 + first, min(d * 24 + first + length, d * 24 + hi))
        spike[span] += size

    load = cfg.base_load + daily + weekly + annual + noise + spike

    u_temp = _couple(load, cfg.alpha_temp, rng_for(cfg.seed, "synth/temp").integers(2**32))
    u_price = _couple(load, cfg.alpha_price, rng_for(cfg.seed, "synth/price").integers(2**32))
    temperature = 70.0 + 12.0 * stats.norm.ppf(u_temp)
    price = 25.0 * np.exp(0.35 * stats.norm.ppf(u_price))

    nuisance = rng_for(cfg.seed, "synth/nuisance")
    humidity = np.clip(60.0 - 0.6 * (temperature - 70.0) + _ar1(nuisance, n, 0.9, 8.0), 5.0, 100.0)
    pressure = 1013.0 + _ar1(nuisance, n, 0.97, 5.0)
    wind_speed = np.abs(8.0 + _ar1(nuisance, n, 0.85, 3.0))

    series = RecordSeries(stamps, load, temperature, price, humidity, pressure, wind_speed)
    if not (np.all(series.load > 0) and all(np.all(np.isfinite(getattr(series, f))) for f in
                                            ("load", "temperature", "price", "humidity", "pressure", "wind_speed"))):
        raise ConfigError("configuration produced non-positive or non-finite load")
    return series
