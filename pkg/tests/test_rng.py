"""Unit tests for hstar.utils.rng."""

from __future__ import annotations

import numpy as np
import pytest

from hstar.utils.rng import SEED_BITS, as_generator, derive, fresh_seed


class TestDerive:
    """Test derived random streams."""

    def test_same_path_gives_same_stream(self) -> None:
        """Test that identical seed and keys reproduce the draws."""
        a = derive(42, "null", "normal", "max", 10, 3).standard_normal(5)
        b = derive(42, "null", "normal", "max", 10, 3).standard_normal(5)

        np.testing.assert_array_equal(a, b)

    @pytest.mark.parametrize(
        "other",
        [(43, "power", 10), (42, "power", 11), (42, "accumulate", 10)],
    )
    def test_different_paths_give_different_streams(
        self, other: tuple[int, str, int]
    ) -> None:
        """Test that changing the seed or any key changes the draws."""
        base = derive(42, "power", 10).random(4)
        seed, *keys = other

        assert not np.array_equal(base, derive(seed, *keys).random(4))

    def test_negative_key_raises(self) -> None:
        """Test that integer keys must be non-negative."""
        with pytest.raises(ValueError, match="non-negative"):
            derive(1, -3)

    def test_order_of_use_does_not_matter(self) -> None:
        """Test that a stream does not depend on other streams being drawn first."""
        alone = derive(7, "bayes", 12, 1).random(3)
        derive(7, "bayes", 12, 0).random(1000)

        np.testing.assert_array_equal(alone, derive(7, "bayes", 12, 1).random(3))


class TestSeeds:
    """Test seed helpers."""

    def test_as_generator_passes_generators_through(self) -> None:
        """Test that an existing generator is returned unchanged."""
        rng = np.random.default_rng(0)

        assert as_generator(rng) is rng

    def test_as_generator_accepts_seed(self) -> None:
        """Test that a seed maps to the root stream."""
        np.testing.assert_array_equal(
            as_generator(9).random(2), derive(9).random(2)
        )

    def test_fresh_seed_fits_in_seed_bits(self) -> None:
        """Test that generated seeds are non-negative and bounded."""
        seeds = {fresh_seed() for _ in range(20)}

        assert all(0 <= s < 2**SEED_BITS for s in seeds)
        assert len(seeds) > 1
