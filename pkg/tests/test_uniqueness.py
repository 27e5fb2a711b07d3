"""Unit tests for hstar.stats.uniqueness."""

from __future__ import annotations

import pytest

from hstar.errors import InvalidCounts, InvalidParameter
from hstar.models import UniquenessIndex
from hstar.stats.uniqueness import classify_quadrant, i_index, novelty_holds


class TestIIndex:
    """Test the occurrence share."""

    def test_single_occurrence(self) -> None:
        """Test a feature seen once in ten."""
        assert i_index(1, 10) == 0.1

    def test_feature_in_every_member(self) -> None:
        """Test the upper end of the index."""
        assert i_index(7, 7) == 1.0

    @pytest.mark.parametrize(("f", "n0"), [(0, 10), (11, 10), (1, 0), (-1, 5)])
    def test_invalid_counts(self, f: int, n0: int) -> None:
        """Test that f must lie in [1, n0]."""
        with pytest.raises(InvalidCounts):
            i_index(f, n0)


class TestNovelty:
    """Test the novelty check over cumulative samples."""

    def test_holds(self) -> None:
        """Test a feature that stays rarer than 1/n0."""
        idx = UniquenessIndex(f=1, n0=10, cumulative_samples=[(100, 5), (1000, 20)])

        check = novelty_holds(idx)

        assert check.overall == "Holds"
        assert check.i_index == 0.1
        assert [c.verdict for c in check.checkpoints] == ["Holds", "Holds"]
        assert check.checkpoints[0].observed == 0.05

    def test_equal(self) -> None:
        """Test frequencies that match 1/n0 exactly."""
        idx = UniquenessIndex(f=1, n0=10, cumulative_samples=[(100, 10), (1000, 100)])

        assert novelty_holds(idx).overall == "Equal"

    def test_one_violation_dominates(self) -> None:
        """Test that any violated checkpoint violates the whole check."""
        idx = UniquenessIndex(
            f=1, n0=10, cumulative_samples=[(100, 5), (200, 10), (300, 40)]
        )

        check = novelty_holds(idx)

        assert [c.verdict for c in check.checkpoints] == ["Holds", "Holds", "Violated"]
        assert check.overall == "Violated"

    def test_equal_and_holds_give_holds(self) -> None:
        """Test that a mix of equal and holding checkpoints holds."""
        idx = UniquenessIndex(f=1, n0=10, cumulative_samples=[(100, 10), (200, 5)])

        assert novelty_holds(idx).overall == "Holds"

    def test_comparison_is_exact(self) -> None:
        """Test equality where floating-point division would round."""
        idx = UniquenessIndex(f=1, n0=49, cumulative_samples=[(4900, 100)])

        assert novelty_holds(idx).checkpoints[0].verdict == "Equal"

    def test_no_checkpoints(self) -> None:
        """Test that an empty history is untested rather than equal."""
        check = novelty_holds(UniquenessIndex(f=2, n0=50))

        assert check.overall == "Untested"
        assert check.checkpoints == []
        assert check.i_index == 0.04

    @pytest.mark.parametrize(
        ("samples", "universe"),
        [
            ([(10, 1)], None),
            ([(100, 1), (100, 2)], None),
            ([(100, 101)], None),
            ([(100, -1)], None),
            ([(100, 1)], 50),
        ],
    )
    def test_inconsistent_counts(
        self, samples: list[tuple[int, int]], universe: int | None
    ) -> None:
        """Test non-increasing sizes, impossible occurrences and the population bound."""
        idx = UniquenessIndex(f=1, n0=10, cumulative_samples=samples, universe=universe)

        with pytest.raises(InvalidCounts):
            novelty_holds(idx)

    def test_f_above_n0(self) -> None:
        """Test that the initial counts are validated too."""
        with pytest.raises(InvalidCounts):
            novelty_holds(UniquenessIndex(f=12, n0=10))


class TestQuadrant:
    """Test the h* x I classification."""

    @pytest.mark.parametrize(
        ("significant", "i_value", "expected"),
        [
            (True, 0.001, "unique-genius"),
            (True, 0.2, "recurring-exceptional"),
            (False, 0.2, "common-above-average"),
            (False, 0.001, "rare-ordinary"),
            (True, 0.05, "recurring-exceptional"),
        ],
    )
    def test_quadrants(self, significant: bool, i_value: float, expected: str) -> None:
        """Test every quadrant and the threshold boundary."""
        assert classify_quadrant(significant, i_value, 0.05) == expected

    @pytest.mark.parametrize("threshold", [0.0, 1.5, -0.1])
    def test_invalid_threshold(self, threshold: float) -> None:
        """Test that the threshold lies in (0, 1]."""
        with pytest.raises(InvalidParameter):
            classify_quadrant(True, 0.1, threshold)
