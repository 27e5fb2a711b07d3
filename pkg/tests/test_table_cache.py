"""Unit tests for the null-distribution cache."""

from __future__ import annotations

import logging

import pytest
from pytest_mock import MockerFixture

from hstar.config import Settings
from hstar.models import DistributionSpec
from hstar.stats import montecarlo
from hstar.utils.table_cache import NullDistributionCache

NORMAL = DistributionSpec()
LOGNORMAL = DistributionSpec(kind="lognormal", sigma=0.8)


class TestLookup:
    """Test memory, disk and simulation fall-through."""

    def test_get_simulates_once(
        self, settings_fixture: Settings, mocker: MockerFixture
    ) -> None:
        """Test that a second lookup is served from memory."""
        spy = mocker.spy(montecarlo, "simulate_null")
        cache = NullDistributionCache(settings_fixture, seed=3)

        first = cache.get(NORMAL, 6)
        second = cache.get(DistributionSpec(mu=4.0, sigma=2.0), 6)

        assert first is second
        assert spy.call_count == 1
        assert (cache.hits, cache.misses) == (1, 1)

    def test_get_writes_and_reloads_from_disk(
        self, settings_fixture: Settings, mocker: MockerFixture
    ) -> None:
        """Test that a fresh cache finds a previously simulated file."""
        NullDistributionCache(settings_fixture, seed=3).get(NORMAL, 6)
        path = settings_fixture.cache_dir / "normal__max__n6__w0.0025__cap200.csv"
        assert path.exists()
        spy = mocker.spy(montecarlo, "simulate_null")

        null = NullDistributionCache(settings_fixture, seed=99).get(NORMAL, 6)

        spy.assert_not_called()
        assert null.seed == 3
        assert null.total == 20_000

    def test_disk_disabled(self, settings_fixture: Settings) -> None:
        """Test that use_cache=False neither writes nor reads files."""
        settings = settings_fixture.model_copy(update={"use_cache": False})

        NullDistributionCache(settings, seed=1).get(NORMAL, 5)

        assert not settings.cache_dir.exists()

    def test_smaller_file_is_not_reused(
        self, settings_fixture: Settings, mocker: MockerFixture
    ) -> None:
        """Test that a file with fewer trials than requested is simulated again."""
        NullDistributionCache(settings_fixture, seed=1).get(NORMAL, 5)
        spy = mocker.spy(montecarlo, "simulate_null")

        null = NullDistributionCache(settings_fixture, trials=30_000, seed=1).get(NORMAL, 5)

        assert spy.call_count == 1
        assert null.total == 30_000

    @pytest.mark.parametrize(
        "update", [{"bin_width": 0.005}, {"normal_overflow_cap": 100.0}]
    )
    def test_other_binning_is_not_reused(
        self, settings_fixture: Settings, mocker: MockerFixture, update: dict[str, float]
    ) -> None:
        """Test that a change of bin width or overflow cap gets its own file."""
        first = NullDistributionCache(settings_fixture, seed=1)
        first.get(NORMAL, 5)
        settings = settings_fixture.model_copy(update=update)
        second = NullDistributionCache(settings, seed=1)
        spy = mocker.spy(montecarlo, "simulate_null")

        null = second.get(NORMAL, 5)

        assert spy.call_count == 1
        assert second.path_for(NORMAL, 5) != first.path_for(NORMAL, 5)
        assert second.path_for(NORMAL, 5).exists()
        assert null.bin_width == settings.bin_width

    def test_file_with_other_binning_is_ignored(
        self,
        settings_fixture: Settings,
        mocker: MockerFixture,
        caplog: pytest.LogCaptureFixture,
    ) -> None:
        """Test that a file whose header disagrees with its name is simulated again."""
        first = NullDistributionCache(settings_fixture, seed=1)
        first.get(NORMAL, 5)
        settings = settings_fixture.model_copy(update={"bin_width": 0.005})
        second = NullDistributionCache(settings, seed=1)
        first.path_for(NORMAL, 5).rename(second.path_for(NORMAL, 5))
        spy = mocker.spy(montecarlo, "simulate_null")

        with caplog.at_level(logging.WARNING):
            null = second.get(NORMAL, 5)

        assert spy.call_count == 1
        assert "binned with width 0.0025" in caplog.text
        assert null.bin_width == 0.005

    def test_unreadable_file_is_ignored(
        self, settings_fixture: Settings, caplog: pytest.LogCaptureFixture
    ) -> None:
        """Test that a corrupt cache file is replaced after a warning."""
        cache = NullDistributionCache(settings_fixture, seed=1)
        path = cache.path_for(NORMAL, 5)
        path.parent.mkdir(parents=True)
        path.write_text("not a null distribution\n")

        with caplog.at_level(logging.WARNING):
            null = cache.get(NORMAL, 5)

        assert "Ignoring unreadable cache file" in caplog.text
        assert null.total == 20_000
        assert montecarlo.load_null(path).total == 20_000

    def test_write_failure_is_logged(
        self,
        settings_fixture: Settings,
        mocker: MockerFixture,
        caplog: pytest.LogCaptureFixture,
    ) -> None:
        """Test that a failed write does not lose the simulated distribution."""
        mocker.patch.object(montecarlo, "save_null", side_effect=OSError("read-only"))
        cache = NullDistributionCache(settings_fixture, seed=1)

        with caplog.at_level(logging.WARNING):
            null = cache.get(NORMAL, 5)

        assert null.n == 5
        assert "Could not write cache file" in caplog.text

    def test_symmetric_prior_shares_sides(self, settings_fixture: Settings) -> None:
        """Test that normal min and max sides use one file."""
        cache = NullDistributionCache(settings_fixture)

        assert cache.path_for(NORMAL, 7, "min") == cache.path_for(NORMAL, 7, "max")
        assert cache.path_for(LOGNORMAL, 7, "min") != cache.path_for(LOGNORMAL, 7, "max")
        assert cache.path_for(LOGNORMAL, 7, "min").name == (
            "lognormal-s0.8000__min__n7__w0.0025__cap10000.csv"
        )

    def test_close_drops_memory(
        self, settings_fixture: Settings, mocker: MockerFixture
    ) -> None:
        """Test that closing empties the in-memory store."""
        settings = settings_fixture.model_copy(update={"use_cache": False})
        with NullDistributionCache(settings, seed=1) as cache:
            cache.get(NORMAL, 5)
        spy = mocker.spy(montecarlo, "simulate_null")

        cache.get(NORMAL, 5)

        assert spy.call_count == 1


class TestQueries:
    """Test p-values and critical values served by the cache."""

    def test_values_match_direct_computation(self, settings_fixture: Settings) -> None:
        """Test that cache queries agree with the montecarlo functions."""
        cache = NullDistributionCache(settings_fixture, seed=2)
        null = cache.get(NORMAL, 8)

        assert cache.p_value(2.0, 8, NORMAL) == montecarlo.p_value(null, 2.0)
        assert cache.critical_value(0.05, 8, NORMAL) == montecarlo.critical_value(
            null, 0.05
        )

    def test_interpolates_between_cached_sizes(
        self, settings_fixture: Settings, mocker: MockerFixture
    ) -> None:
        """Test linear interpolation in 1/nu between the nearest cached sizes."""
        cache = NullDistributionCache(settings_fixture, seed=2)
        lo, hi = cache.get(NORMAL, 8), cache.get(NORMAL, 12)
        spy = mocker.spy(montecarlo, "simulate_null")

        p = cache.p_value(2.2, 10, NORMAL)
        h = cache.critical_value(0.05, 10, NORMAL)

        spy.assert_not_called()
        weight = (1 / 8 - 1 / 10) / (1 / 6 - 1 / 10)
        assert p == pytest.approx(
            weight * montecarlo.p_value(lo, 2.2) + (1 - weight) * montecarlo.p_value(hi, 2.2)
        )
        assert h == pytest.approx(
            weight * montecarlo.critical_value(lo, 0.05)
            + (1 - weight) * montecarlo.critical_value(hi, 0.05)
        )

    def test_interpolation_disabled(
        self, settings_fixture: Settings, mocker: MockerFixture
    ) -> None:
        """Test that interpolate_rows=False simulates the exact size."""
        settings = settings_fixture.model_copy(update={"interpolate_rows": False})
        cache = NullDistributionCache(settings, seed=2)
        cache.get(NORMAL, 8)
        cache.get(NORMAL, 12)
        spy = mocker.spy(montecarlo, "simulate_null")

        cache.p_value(2.2, 10, NORMAL)

        assert spy.call_count == 1

    def test_no_interpolation_outside_cached_range(
        self, settings_fixture: Settings, mocker: MockerFixture
    ) -> None:
        """Test that a size above every cached size is simulated."""
        cache = NullDistributionCache(settings_fixture, seed=2)
        cache.get(NORMAL, 8)
        spy = mocker.spy(montecarlo, "simulate_null")

        cache.p_value(2.2, 9, NORMAL)

        assert spy.call_count == 1
