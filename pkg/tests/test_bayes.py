"""Unit tests for hstar.stats.bayes."""

from __future__ import annotations

import math

import numpy as np
import pytest
from pytest_mock import MockerFixture

from hstar.errors import (
    DegenerateNormalizer,
    InvalidParameter,
    OutOfSupport,
    TooFewOrdinary,
)
from hstar.models import BayesSpec, LikelihoodTables
from hstar.stats import bayes
from hstar.stats.bayes import (
    analyse_candidates,
    combined_posterior,
    delta_grid,
    likelihood_tables,
    marginal_likelihood,
    posterior,
    posterior_from_likelihoods,
    threshold_normalizer,
)
from hstar.stats.statistic import h_star_of_candidate

SPEC = BayesSpec(trials=2_000, delta_nodes=8, seed=4)
DATA = [4.9, 5.3, 5.0, 4.7, 5.1, 5.2, 4.8, 9.0]


@pytest.fixture(scope="module")
def tables_n8() -> LikelihoodTables:
    """Likelihood tables for samples of eight, 80 bins of 25 null statistics."""
    return likelihood_tables(8, SPEC)


@pytest.fixture(scope="module")
def tables_n20() -> LikelihoodTables:
    """Likelihood tables for samples of twenty at 20,000 trials."""
    return likelihood_tables(20, BayesSpec(trials=20_000, delta_nodes=64, seed=9))


class TestDeltaGrid:
    """Test the shift quadrature."""

    def test_midpoints_and_weights(self) -> None:
        """Test node placement and normalized half-normal weights."""
        nodes, weights = delta_grid(BayesSpec(tau=2.0, truncation=3.0, delta_nodes=6))

        np.testing.assert_allclose(nodes, [0.5, 1.5, 2.5, 3.5, 4.5, 5.5])
        assert weights.sum() == pytest.approx(1.0)
        assert np.all(np.diff(weights) < 0)


class TestLikelihoodTables:
    """Test the simulated laws."""

    def test_rows_are_probabilities(self, tables_n8: LikelihoodTables) -> None:
        """Test that every smoothed law sums to one and has no empty bin."""
        assert tables_n8.null_mass.sum() == pytest.approx(1.0)
        np.testing.assert_allclose(tables_n8.outlier_mass.sum(axis=1), 1.0)
        assert tables_n8.outlier_mass.shape == (8, tables_n8.null_mass.size)
        assert tables_n8.null_mass.size == tables_n8.edges.size + 1
        assert tables_n8.null_mass.min() > 0.0
        assert tables_n8.epsilon == pytest.approx(1 / 20_000)
        assert tables_n8.likelihood_outlier.sum() == pytest.approx(1.0)
        assert tables_n8.likelihood_outlier.min() > 0.0

    def test_bins_hold_equal_null_counts(self, tables_n8: LikelihoodTables) -> None:
        """Test that quantile edges put about 25 null statistics in each of 80 bins."""
        assert tables_n8.null_mass.size == 80
        assert tables_n8.edges[0] > 1 / math.sqrt(2)
        assert np.all(np.diff(tables_n8.edges) > 0)
        np.testing.assert_allclose(tables_n8.null_mass, 1 / 80, rtol=0.1)

    def test_likelihood_ratio_never_decreases(self, tables_n20: LikelihoodTables) -> None:
        """Test that the pooled ratio of outlier to ordinary likelihood rises with h*."""
        ratio = tables_n20.likelihood_outlier / tables_n20.null_mass

        assert np.all(np.diff(ratio) >= -1e-12 * ratio[1:])
        assert tables_n20.pooled_bins < tables_n20.null_mass.size

    def test_zero_shift_equals_null(self) -> None:
        """Test that a zero shift reproduces the null law from the same draws."""
        tables = likelihood_tables(6, SPEC, deltas=[0.0, 3.0])

        np.testing.assert_array_equal(tables.outlier_mass[0], tables.null_mass)
        assert not np.array_equal(tables.outlier_mass[1], tables.null_mass)

    def test_reproducible(self, tables_n8: LikelihoodTables) -> None:
        """Test that the same seed gives the same tables."""
        again = likelihood_tables(8, SPEC)

        np.testing.assert_array_equal(again.edges, tables_n8.edges)
        np.testing.assert_array_equal(again.outlier_mass, tables_n8.outlier_mass)

    def test_invalid_arguments(self) -> None:
        """Test the size, bin and shift checks."""
        with pytest.raises(InvalidParameter):
            likelihood_tables(3, SPEC)
        with pytest.raises(InvalidParameter):
            likelihood_tables(6, SPEC, deltas=[-1.0])
        with pytest.raises(InvalidParameter):
            likelihood_tables(6, BayesSpec(trials=1_000, null_per_bin=600))


class TestLikelihoodAndPosterior:
    """Test likelihood lookup and the posterior integral."""

    def test_large_h_favours_outlier(self, tables_n8: LikelihoodTables) -> None:
        """Test that a far candidate is more likely under contamination."""
        outlier, ordinary = marginal_likelihood(6.0, tables_n8)

        assert outlier > ordinary
        assert posterior(6.0, tables_n8, SPEC) > posterior(0.9, tables_n8, SPEC)

    def test_posterior_never_decreases_in_h(self, tables_n20: LikelihoodTables) -> None:
        """Test a fine sweep of h* from the support minimum to infinity."""
        spec = BayesSpec(trials=20_000, seed=9)
        sweep = [*np.linspace(1 / math.sqrt(2), 12.0, 4_000).tolist(), 50.0, math.inf]

        p = np.array([posterior(h, tables_n20, spec) for h in sweep])

        assert np.all(np.diff(p) >= -1e-12)
        assert p[-1] > 0.9
        assert p[0] < 0.5

    @pytest.mark.slow
    def test_posterior_never_decreases_at_default_settings(self) -> None:
        """Test 400 values of h* from 0.75 to 8 against default tables for n = 10."""
        spec = BayesSpec()
        tables = likelihood_tables(10, spec)

        p = np.array([posterior(h, tables, spec) for h in np.linspace(0.75, 8.0, 400)])

        assert np.all(np.diff(p) >= -1e-12)
        assert tables.edges.size == 3_999

    def test_infinity_uses_last_bin(self, tables_n8: LikelihoodTables) -> None:
        """Test that an infinite h* reads the open-ended bin."""
        outlier, ordinary = marginal_likelihood(math.inf, tables_n8)

        assert ordinary == tables_n8.null_mass[-1]
        assert outlier == tables_n8.likelihood_outlier[-1]

    @pytest.mark.parametrize("h", [0.5, math.nan])
    def test_out_of_support(self, tables_n8: LikelihoodTables, h: float) -> None:
        """Test that values below 1/sqrt(2) or NaN raise."""
        with pytest.raises(OutOfSupport):
            marginal_likelihood(h, tables_n8)

    def test_support_minimum_is_accepted(self, tables_n8: LikelihoodTables) -> None:
        """Test that h* exactly at 1/sqrt(2) is in the first bin."""
        _, ordinary = marginal_likelihood(1 / math.sqrt(2), tables_n8)

        assert ordinary == tables_n8.null_mass[0]

    def test_equal_likelihoods_give_one_half(self) -> None:
        """Test that the Beta(1/2, 1/2) prior mean is returned."""
        assert posterior_from_likelihoods(0.3, 0.3) == pytest.approx(0.5, abs=1e-6)

    @pytest.mark.parametrize("ratio", [1 / 16, 4.0, 361.0, 1e4])
    def test_closed_form(self, ratio: float) -> None:
        """Test the quadrature against sqrt(r) / (1 + sqrt(r)) for likelihood ratio r."""
        expected = math.sqrt(ratio) / (1.0 + math.sqrt(ratio))

        assert posterior_from_likelihoods(ratio * 1e-4, 1e-4) == pytest.approx(expected, abs=1e-8)

    def test_extreme_likelihoods(self) -> None:
        """Test the limits of the posterior."""
        assert posterior_from_likelihoods(0.0, 0.2) == 0.0
        assert posterior_from_likelihoods(0.2, 0.0) == pytest.approx(1.0)
        assert posterior_from_likelihoods(0.9, 0.1) > posterior_from_likelihoods(0.6, 0.4)

    def test_invalid_likelihoods(self) -> None:
        """Test that negative or all-zero likelihoods raise."""
        with pytest.raises(InvalidParameter):
            posterior_from_likelihoods(-0.1, 0.2)
        with pytest.raises(DegenerateNormalizer):
            posterior_from_likelihoods(0.0, 0.0)


class TestQuadratureStability:
    """Test that doubling either quadrature barely moves the posterior."""

    SWEEP = [1.2, 1.6, 2.0, 2.5, 3.0, 4.0, 6.0]

    def test_doubling_shift_nodes(self, tables_n20: LikelihoodTables) -> None:
        """Test 32 against 64 shift nodes on the same draws."""
        coarse = likelihood_tables(20, BayesSpec(trials=20_000, delta_nodes=32, seed=9))
        spec = BayesSpec()

        np.testing.assert_array_equal(coarse.edges, tables_n20.edges)
        for h in self.SWEEP:
            assert posterior(h, coarse, spec) == pytest.approx(
                posterior(h, tables_n20, spec), abs=0.01
            )

    def test_doubling_pi_nodes(self, tables_n20: LikelihoodTables) -> None:
        """Test 128 against 256 Gauss-Legendre nodes."""
        for h in self.SWEEP:
            assert posterior(h, tables_n20, BayesSpec(pi_nodes=256)) == pytest.approx(
                posterior(h, tables_n20, BayesSpec(pi_nodes=128)), abs=0.01
            )


class TestCombinedPosterior:
    """Test the threshold normalizer and the combined probability."""

    def test_two_candidates(self) -> None:
        """Test outcomes {top} and {top, second} for posteriors 0.9 and 0.8."""
        combined, normalizer = combined_posterior([0.9, 0.8])

        assert normalizer == pytest.approx(0.9 * 0.2 + 0.9 * 0.8)
        assert combined == pytest.approx(0.8)

    def test_null_outcome(self) -> None:
        """Test that the no-outlier outcome enlarges the normalizer."""
        assert threshold_normalizer([0.9, 0.8], include_null_outcome=True) == pytest.approx(0.92)
        combined, _ = combined_posterior([0.9, 0.8], include_null_outcome=True)
        assert combined == pytest.approx(0.72 / 0.92)

    def test_single_candidate_with_null_outcome(self) -> None:
        """Test that one candidate keeps its own posterior."""
        combined, normalizer = combined_posterior([0.37], include_null_outcome=True)

        assert normalizer == pytest.approx(1.0)
        assert combined == pytest.approx(0.37)

    def test_invalid_inputs(self) -> None:
        """Test empty input, values outside [0, 1] and a vanishing normalizer."""
        with pytest.raises(InvalidParameter):
            combined_posterior([])
        with pytest.raises(InvalidParameter):
            combined_posterior([0.5, 1.5])
        with pytest.raises(DegenerateNormalizer):
            combined_posterior([0.0, 0.0])


class TestAnalyseCandidates:
    """Test the end-to-end posterior for data."""

    def test_single_candidate(self, tables_n8: LikelihoodTables) -> None:
        """Test the posterior of the largest value against precomputed tables."""
        labels = [f"p{i}" for i in range(len(DATA))]

        result = analyse_candidates(DATA, 1, SPEC, labels=labels, tables=tables_n8)

        assert result.n == 8
        candidate = result.per_candidate[0]
        assert (candidate.index, candidate.label) == (7, "p7")
        assert candidate.h_obs == pytest.approx(h_star_of_candidate(DATA[:7], 9.0))
        assert result.combined == pytest.approx(1.0)
        assert 0.0 <= candidate.posterior <= 1.0

    def test_tables_are_simulated_for_other_sizes(
        self, tables_n8: LikelihoodTables, mocker: MockerFixture
    ) -> None:
        """Test that tables of the wrong size are replaced."""
        spy = mocker.spy(bayes, "likelihood_tables")

        result = analyse_candidates(DATA, 2, SPEC, tables=tables_n8)

        spy.assert_called_once()
        assert result.n == 7
        assert len(result.per_candidate) == 2

    def test_min_side(self, tables_n8: LikelihoodTables) -> None:
        """Test that the smallest value is the candidate on the min side."""
        data = [5.0, 4.9, 5.3, 5.1, 4.7, 5.2, 4.8, 1.0]

        result = analyse_candidates(data, 1, SPEC, side="min", tables=tables_n8)

        assert result.per_candidate[0].index == 7

    def test_invalid_candidate_counts(self) -> None:
        """Test n' bounds and the ordinary minimum."""
        with pytest.raises(InvalidParameter):
            analyse_candidates(DATA, 0, SPEC)
        with pytest.raises(TooFewOrdinary):
            analyse_candidates(DATA, 5, SPEC)
