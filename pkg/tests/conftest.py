"""Pytest configuration and shared fixtures.

This module provides reusable fixtures for testing the h* library: isolated
settings, a deterministic stand-in for the null-distribution cache, a small
simulated null distribution and the paths of the bundled data files.
"""

from __future__ import annotations

from collections.abc import Callable, Iterator
import math
import os
from pathlib import Path

import pytest

from hstar.config import Settings, get_settings
from hstar.models import DistributionSpec, NullDistribution, Side
from hstar.stats.montecarlo import simulate_null

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

# ids flagged on the pretest of the bundled loneliness study
APPENDIX_E_OUTLIERS = ["26", "59", "68", "158", "173", "177"]


@pytest.fixture
def settings_fixture(
    monkeypatch: pytest.MonkeyPatch, tmp_path: Path
) -> Iterator[Settings]:
    """Provide settings with a private cache directory and no .env file.

    Args:
        monkeypatch: Pytest monkeypatch fixture for environment manipulation.
        tmp_path: Per-test temporary directory.

    Yields:
        Settings instance configured for testing.
    """
    monkeypatch.chdir(tmp_path)
    for name in list(os.environ):
        if name.startswith("HSTAR_"):
            monkeypatch.delenv(name)
    monkeypatch.setenv("HSTAR_CACHE_DIR", str(tmp_path / "cache"))
    monkeypatch.setenv("HSTAR_TRIALS", "20000")
    monkeypatch.setenv("HSTAR_THREADS", "2")
    get_settings.cache_clear()
    yield get_settings()
    get_settings.cache_clear()


class FakeNullSource:
    """Null source returning p-values from a function of h* alone.

    Records every request so tests can check the sizes and priors used.
    """

    def __init__(
        self,
        p_of_h: Callable[[float], float] | None = None,
        critical: float = 2.5,
    ) -> None:
        self.p_of_h = p_of_h or (lambda h: 0.001 if h > 3.0 else 0.5)
        self.critical = critical
        self.p_requests: list[tuple[float, int, DistributionSpec, Side]] = []
        self.critical_requests: list[tuple[float, int, DistributionSpec, Side]] = []

    def p_value(
        self, h_obs: float, n: int, prior: DistributionSpec, side: Side = "max"
    ) -> float:
        self.p_requests.append((h_obs, n, prior, side))
        return 0.0 if math.isinf(h_obs) else self.p_of_h(h_obs)

    def critical_value(
        self, alpha: float, n: int, prior: DistributionSpec, side: Side = "max"
    ) -> float:
        self.critical_requests.append((alpha, n, prior, side))
        return self.critical


@pytest.fixture
def fake_null_source() -> FakeNullSource:
    """Provide a null source that rejects when h* exceeds 3.

    Returns:
        FakeNullSource instance.
    """
    return FakeNullSource()


@pytest.fixture(scope="session")
def small_null() -> NullDistribution:
    """Provide a 20,000-trial normal null distribution for n = 10.

    Returns:
        The simulated distribution (seed 1).
    """
    return simulate_null(DistributionSpec(), 10, 20_000, seed=1, threads=2)


@pytest.fixture
def appendix_e_path() -> Path:
    """Path of the bundled pre/post loneliness scores.

    Returns:
        Path to the ``id,pre,post`` CSV file.
    """
    return FIXTURES / "appendix_e_loneliness.csv"


@pytest.fixture
def write_csv(tmp_path: Path) -> Callable[[str, str], Path]:
    """Provide a helper that writes a CSV file into the test directory.

    Returns:
        Function taking a file name and its text, returning the path.
    """

    def _write(name: str, text: str) -> Path:
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path

    return _write
