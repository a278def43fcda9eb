import numpy as np
import pytest

from copula_dbn.ingest import RecordSeries
from copula_dbn.synthgen import ScenarioConfig, gen_scenario


def make_series(n: int, start: str = "2016-03-01T00", load=None, seed: int = 0) -> RecordSeries:
    rng = np.random.default_rng(seed)
    ts = np.datetime64(start, "h") + np.arange(n) * np.timedelta64(1, "h")
    if load is None:
        load = 30000 + 5000 * np.sin(2 * np.pi * np.arange(n) / 24) + rng.normal(0, 100, n)
    return RecordSeries(
        ts,
        np.asarray(load, dtype=float),
        70 + rng.normal(0, 5, n),
        30 + rng.normal(0, 3, n),
        60 + rng.normal(0, 5, n),
        1010 + rng.normal(0, 2, n),
        5 + rng.normal(0, 1, n),
    )


@pytest.fixture(scope="session")
def year():
    """Default synthetic year, shared because generation and fitting are reused widely."""
    return gen_scenario(ScenarioConfig())


@pytest.fixture(scope="session")
def short_scenario():
    return gen_scenario(ScenarioConfig(days=60, seed=3, start="2016-06-01"))


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
