"""Unit tests for hstar.stats.power."""

from __future__ import annotations

import math

import numpy as np
import pytest

from hstar.errors import DegenerateDesign, InvalidParameter
from hstar.models import AccumulationPoint, AccumulationSpec, PowerStudySpec
from hstar.stats.power import (
    accumulation_frame,
    accumulation_study,
    power_curve,
    power_frame,
    regress,
    regress_xy,
)
from tests.conftest import FakeNullSource


def _points(n_values: list[int], mean_h: list[float], htilde: list[float]) -> list[AccumulationPoint]:
    return [
        AccumulationPoint(effect=3.0, n=n, mean_h=h, sd_h=0.1, mean_htilde=t, power=0.5)
        for n, h, t in zip(n_values, mean_h, htilde, strict=True)
    ]


class TestPowerCurve:
    """Test power estimation."""

    @pytest.fixture
    def spec(self) -> PowerStudySpec:
        """A small grid."""
        return PowerStudySpec(
            effect_sizes=[0.0, 5.0], confidence_levels=[0.95], n_values=[10, 5], trials=400, seed=1
        )

    def test_grid_and_order(
        self, spec: PowerStudySpec, fake_null_source: FakeNullSource
    ) -> None:
        """Test one point per grid cell, ordered by effect, CL and n."""
        points = power_curve(spec, fake_null_source)

        assert [(p.effect, p.n) for p in points] == [(0.0, 5), (0.0, 10), (5.0, 5), (5.0, 10)]
        alphas = {round(req[0], 10) for req in fake_null_source.critical_requests}
        assert alphas == {0.05}
        assert {req[2].kind for req in fake_null_source.critical_requests} == {"normal"}

    def test_power_grows_with_effect(
        self, spec: PowerStudySpec, fake_null_source: FakeNullSource
    ) -> None:
        """Test that a larger shift is detected more often on the same draws."""
        points = {(p.effect, p.n): p.power for p in power_curve(spec, fake_null_source)}

        assert points[(5.0, 10)] > points[(0.0, 10)]
        assert points[(5.0, 5)] > points[(0.0, 5)]
        assert all(0.0 <= v <= 1.0 for v in points.values())

    def test_reproducible(self, spec: PowerStudySpec) -> None:
        """Test that the same seed reproduces every point."""
        a = power_curve(spec, FakeNullSource())
        b = power_curve(spec, FakeNullSource())

        assert a == b

    @pytest.mark.parametrize(
        "update",
        [{"effect_sizes": [-1.0]}, {"confidence_levels": [1.0]}, {"n_values": [3, 5]}, {"n_values": []}],
    )
    def test_invalid_grids(
        self, spec: PowerStudySpec, update: dict[str, object], fake_null_source: FakeNullSource
    ) -> None:
        """Test the grid checks."""
        with pytest.raises(InvalidParameter):
            power_curve(spec.model_copy(update=update), fake_null_source)

    def test_frame(self, spec: PowerStudySpec, fake_null_source: FakeNullSource) -> None:
        """Test the tabular form of the points."""
        frame = power_frame(power_curve(spec, fake_null_source))

        assert list(frame.columns) == ["effect", "cl", "n", "power"]
        assert len(frame) == 4


class TestAccumulation:
    """Test the accumulation study."""

    @pytest.fixture
    def spec(self) -> AccumulationSpec:
        """A short schedule."""
        return AccumulationSpec(effect_size=3.0, n_schedule=[5, 10, 20, 40], trials=300, seed=2)

    def test_points(self, spec: AccumulationSpec, fake_null_source: FakeNullSource) -> None:
        """Test one point per scheduled size with consistent rescaling."""
        points = accumulation_study(spec, fake_null_source)

        assert [p.n for p in points] == [5, 10, 20, 40]
        for p in points:
            assert p.mean_h >= 1 / math.sqrt(2)
            assert p.mean_htilde == pytest.approx(math.sqrt(2 / (p.n - 2)) * p.mean_h)
            assert p.sd_h > 0
        assert [req[1] for req in fake_null_source.critical_requests] == [5, 10, 20, 40]

    def test_rescaled_statistic_shrinks(
        self, spec: AccumulationSpec, fake_null_source: FakeNullSource
    ) -> None:
        """Test that h~* of a fixed outlier falls as ordinary data accumulate."""
        htilde = [p.mean_htilde for p in accumulation_study(spec, fake_null_source)]

        assert htilde == sorted(htilde, reverse=True)

    def test_reproducible(self, spec: AccumulationSpec) -> None:
        """Test that the same seed reproduces the study."""
        assert accumulation_study(spec, FakeNullSource()) == accumulation_study(
            spec, FakeNullSource()
        )

    def test_schedule_must_increase(self, fake_null_source: FakeNullSource) -> None:
        """Test that a non-increasing schedule raises."""
        spec = AccumulationSpec(effect_size=3.0, n_schedule=[5, 10, 10], trials=10)

        with pytest.raises(InvalidParameter):
            accumulation_study(spec, fake_null_source)

    def test_frame(self, spec: AccumulationSpec, fake_null_source: FakeNullSource) -> None:
        """Test the tabular form of the points."""
        frame = accumulation_frame(accumulation_study(spec, fake_null_source))

        assert list(frame.columns) == ["effect", "n", "mean_h", "sd_h", "mean_htilde", "power"]


class TestRegression:
    """Test the regression summaries."""

    def test_exact_line(self) -> None:
        """Test a perfect straight line."""
        slope, intercept, r2, adjusted = regress_xy([1, 2, 3, 4, 5], [3, 5, 7, 9, 11])

        assert (slope, intercept) == (2.0, 1.0)
        assert r2 == pytest.approx(1.0)
        assert adjusted == pytest.approx(1.0)

    def test_too_few_points(self) -> None:
        """Test that four points are not enough."""
        with pytest.raises(DegenerateDesign):
            regress_xy([1, 2, 3, 4], [1, 2, 3, 4])

    def test_constant_design(self) -> None:
        """Test that a constant x raises."""
        with pytest.raises(DegenerateDesign):
            regress_xy([2, 2, 2, 2, 2], [1, 2, 3, 4, 5])

    def test_log10_window(self) -> None:
        """Test the log10 n regression inside the window."""
        n = [10, 20, 30, 40, 50, 60, 70]
        mean_h = [1.0 + 2.0 * math.log10(v) for v in n]
        mean_h[0] = 50.0  # outside the window

        summary = regress(_points(n, mean_h, [1.0] * 7), "log10_n", n_min=20)

        assert summary.slope == pytest.approx(2.0)
        assert summary.intercept == pytest.approx(1.0)
        assert (summary.n_min, summary.n_max, summary.points) == (20, 70, 6)
        assert summary.effect == 3.0

    def test_sqrt_transform(self) -> None:
        """Test the sqrt n regression."""
        n = [20, 30, 40, 50, 60]
        summary = regress(_points(n, [0.5 * math.sqrt(v) for v in n], [1.0] * 5), "sqrt_n")

        assert summary.slope == pytest.approx(0.5)
        assert summary.intercept == pytest.approx(0.0, abs=1e-9)

    def test_power_law_exponent(self) -> None:
        """Test that loglog recovers b in a * n^b."""
        n = [20, 40, 80, 160, 320]
        htilde = [3.0 * v**-0.5 for v in n]

        summary = regress(_points(n, [1.0] * 5, htilde), "loglog")

        assert summary.slope == pytest.approx(-0.5)
        assert np.exp(summary.intercept) == pytest.approx(3.0)

    def test_window_too_small(self) -> None:
        """Test that a window with fewer than five points raises."""
        n = [10, 20, 30, 40, 50, 60]

        with pytest.raises(DegenerateDesign):
            regress(_points(n, [1.0, 2, 3, 4, 5, 6], [1.0] * 6), n_max=40)
