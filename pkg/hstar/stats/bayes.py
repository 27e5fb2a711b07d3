"""Posterior outlier probabilities under a contamination model.

Each candidate ``j`` is an outlier (``L_j = 1``) with unknown probability
``pi_j ~ Beta(1/2, 1/2)``; an outlier is an ordinary standard-normal value
shifted by ``delta_j``, ``delta_j ~ HalfNormal(tau)``. The likelihoods of an
observed h* under both hypotheses come from simulated, binned laws of h*.

Likelihood tables:

* bins are cut at quantiles of the simulated null law, ``null_per_bin``
  statistics to a bin, the last bin open to infinity;
* the likelihood ratio of outlier to ordinary is fitted by weighted
  isotonic regression (pool-adjacent-violators, weights the null masses),
  so it never decreases in h* and neither does the posterior.

Quadrature:

* the shift is integrated with a midpoint rule on ``(0, truncation * tau]``
  weighted by the half-normal density and renormalized over the grid;
* ``pi`` is integrated after ``pi = sin^2(theta)``, which turns the
  Beta(1/2, 1/2) measure into the uniform measure ``(2/pi) d(theta)`` on
  ``(0, pi/2)``, with Gauss-Legendre nodes.
"""

from __future__ import annotations

import logging
import math
from typing import TYPE_CHECKING

import numpy as np
from scipy import optimize, special, stats

from hstar.errors import (
    DegenerateNormalizer,
    InvalidParameter,
    OutOfSupport,
    TooFewOrdinary,
)
from hstar.models import (
    BayesSpec,
    LikelihoodTables,
    PosteriorCandidate,
    PosteriorResult,
    Side,
)
from hstar.stats.iut import cut_at_ties, prepare_values
from hstar.stats.montecarlo import BIN_ORIGIN, block_trials
from hstar.stats.statistic import (
    MIN_OBSERVATIONS,
    h_star_from_ordinary_moments,
    h_star_of_candidate,
)
from hstar.utils.rng import derive

if TYPE_CHECKING:
    from collections.abc import Sequence

    from numpy.typing import ArrayLike, NDArray

logger = logging.getLogger(__name__)

# h* may sit a rounding error below its bound
_SUPPORT_TOLERANCE = 1e-12


def delta_grid(spec: BayesSpec) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Midpoint nodes on ``(0, truncation * tau]`` and their half-normal weights."""
    upper = spec.truncation * spec.tau
    step = upper / spec.delta_nodes
    nodes = (np.arange(spec.delta_nodes) + 0.5) * step
    weights = stats.halfnorm.pdf(nodes, scale=spec.tau) * step
    return nodes, weights / weights.sum()


def _simulate_moments(n: int, spec: BayesSpec) -> tuple[NDArray[np.float64], ...]:
    # per trial: sum and sum of squares of the n - 1 ordinary values, their
    # maximum, and the unshifted candidate
    parts: list[tuple[NDArray[np.float64], ...]] = []
    size = block_trials(n)
    done = 0
    block = 0
    while done < spec.trials:
        rows = min(size, spec.trials - done)
        rng = derive(spec.seed, "bayes", n, block)
        ordinary = rng.standard_normal((rows, n - 1))
        noise = rng.standard_normal(rows)
        parts.append(
            (
                ordinary.sum(axis=1),
                np.einsum("ij,ij->i", ordinary, ordinary),
                ordinary.max(axis=1),
                noise,
            )
        )
        done += rows
        block += 1
    s1, s2, top, noise = (np.concatenate(column) for column in zip(*parts, strict=True))
    return s1, s2, top, noise


def _shifted_h(
    s1: NDArray[np.float64],
    s2: NDArray[np.float64],
    top: NDArray[np.float64],
    value: NDArray[np.float64],
    m: int,
) -> NDArray[np.float64]:
    # the sample maximum is either the shifted value or the ordinary top
    alt_s1 = s1 - top + value
    alt_s2 = s2 - top * top + value * value
    return np.where(
        value >= top,
        h_star_from_ordinary_moments(s1, s2, m, value),
        h_star_from_ordinary_moments(alt_s1, alt_s2, m, top),
    )


def likelihood_tables(
    n: int,
    spec: BayesSpec,
    *,
    deltas: Sequence[float] | None = None,
) -> LikelihoodTables:
    """Simulate the binned laws of h* for sample size ``n``.

    Ordinary values are standard normal. Under ``L = 1`` one of the ``n``
    values is shifted by each grid node in turn; all nodes reuse the same
    draws. Bin edges are the ``k / B`` quantiles of the null statistics,
    ``B = trials // null_per_bin``. Counts are smoothed by adding ``epsilon``
    to every bin probability and renormalizing. The shift-averaged outlier
    law is then pooled over adjacent bins so that its ratio to the null law
    never decreases.

    Args:
        n: Sample size (ordinary values plus the candidate).
        spec: Hyperparameters, trial count, smoothing and seed.
        deltas: Explicit shift nodes instead of the midpoint grid; they are
            weighted by the half-normal density, renormalized.

    Raises:
        InvalidParameter: ``n < 4``, fewer trials than two bins need, or a
            negative shift node.
    """
    if n < MIN_OBSERVATIONS:
        raise InvalidParameter(f"Likelihood tables need n >= {MIN_OBSERVATIONS}", n=n)
    if spec.trials < 2 * spec.null_per_bin:
        raise InvalidParameter(
            "Likelihood tables need at least two bins of null statistics",
            trials=spec.trials,
            null_per_bin=spec.null_per_bin,
        )
    if deltas is None:
        nodes, weights = delta_grid(spec)
    else:
        nodes = np.asarray(deltas, dtype=float)
        if nodes.size == 0 or np.any(nodes < 0.0):
            raise InvalidParameter("Shift nodes must be non-negative")
        weights = stats.halfnorm.pdf(nodes, scale=spec.tau)
        weights = weights / weights.sum()

    m = n - 1
    s1, s2, top, noise = _simulate_moments(n, spec)
    null_h = _shifted_h(s1, s2, top, noise, m)
    n_bins = spec.trials // spec.null_per_bin
    edges = np.unique(np.quantile(null_h, np.arange(1, n_bins) / n_bins))
    total_bins = edges.size + 1

    def counts(h: NDArray[np.float64]) -> NDArray[np.int64]:
        return np.bincount(np.searchsorted(edges, h, side="right"), minlength=total_bins)

    null_counts = counts(null_h)
    outlier_counts = np.stack([counts(_shifted_h(s1, s2, top, noise + d, m)) for d in nodes])

    epsilon = spec.epsilon if spec.epsilon is not None else 1.0 / (10 * spec.trials)

    def smooth(c: NDArray[np.int64]) -> NDArray[np.float64]:
        return (c / spec.trials + epsilon) / (1.0 + epsilon * total_bins)

    null_mass = smooth(null_counts)
    outlier_mass = smooth(outlier_counts)
    # weighted by null mass, each pooled run keeps its outlier total
    ratio = (weights @ outlier_mass) / null_mass
    pooled = optimize.isotonic_regression(ratio, weights=null_mass)
    runs = int(pooled.blocks.size - 1)
    logger.info(
        "Likelihood tables for n=%d: %d trials, %d shift nodes, %d bins pooled to %d",
        n,
        spec.trials,
        nodes.size,
        total_bins,
        runs,
    )
    return LikelihoodTables(
        n=n,
        edges=edges,
        trials=spec.trials,
        epsilon=epsilon,
        deltas=nodes,
        delta_weights=weights,
        null_mass=null_mass,
        outlier_mass=outlier_mass,
        likelihood_outlier=pooled.x * null_mass,
        pooled_bins=runs,
    )


def marginal_likelihood(h_obs: float, tables: LikelihoodTables) -> tuple[float, float]:
    """Likelihoods of ``h_obs`` with and without an outlier.

    Values are the probabilities of the bin holding ``h_obs``; the
    outlier value is averaged over the shift grid.

    Returns:
        ``(P(h_obs | L = 1), P(h_obs | L = 0))``.

    Raises:
        OutOfSupport: ``h_obs`` is below 1/sqrt(2) or NaN.
    """
    if math.isnan(h_obs) or h_obs < BIN_ORIGIN - _SUPPORT_TOLERANCE:
        raise OutOfSupport(
            f"h* = {h_obs} lies below its minimum 1/sqrt(2)", h_obs=h_obs
        )
    i = int(np.searchsorted(tables.edges, h_obs, side="right"))
    return float(tables.likelihood_outlier[i]), float(tables.null_mass[i])


def posterior_from_likelihoods(
    likelihood_outlier: float, likelihood_ordinary: float, pi_nodes: int = 128
) -> float:
    """``P(L = 1 | h)`` averaged over ``pi ~ Beta(1/2, 1/2)``.

    Examples:
        >>> round(posterior_from_likelihoods(0.3, 0.3), 6)
        0.5
    """
    if likelihood_outlier < 0.0 or likelihood_ordinary < 0.0:
        raise InvalidParameter("Likelihoods must be non-negative")
    if likelihood_outlier == 0.0 and likelihood_ordinary == 0.0:
        raise DegenerateNormalizer("Both likelihoods are zero")
    x, w = special.roots_legendre(pi_nodes)
    theta = (x + 1.0) * math.pi / 4.0
    pi = np.sin(theta) ** 2
    ratio = pi * likelihood_outlier / (
        pi * likelihood_outlier + (1.0 - pi) * likelihood_ordinary
    )
    return float(min(1.0, max(0.0, 0.5 * np.dot(w, ratio))))


def posterior(h_obs: float, tables: LikelihoodTables, spec: BayesSpec) -> float:
    """Posterior probability that the candidate with statistic ``h_obs`` is an outlier."""
    outlier, ordinary = marginal_likelihood(h_obs, tables)
    return posterior_from_likelihoods(outlier, ordinary, spec.pi_nodes)


def threshold_normalizer(
    posteriors: Sequence[float], *, include_null_outcome: bool = False
) -> float:
    """Sum over outcomes in which the ``k`` most extreme candidates are outliers.

    ``posteriors`` is ordered most extreme first. Outcome ``k`` (``k = 1..n'``)
    marks the ``k`` most extreme candidates as outliers and the rest as
    ordinary; ``include_null_outcome`` adds the outcome with no outlier.
    """
    q = np.asarray(posteriors, dtype=float)
    n_prime = q.size
    outcomes = range(0 if include_null_outcome else 1, n_prime + 1)
    return float(
        sum(np.prod(q[:k]) * np.prod(1.0 - q[k:]) for k in outcomes)
    )


def combined_posterior(
    posteriors: Sequence[float], *, include_null_outcome: bool = False
) -> tuple[float, float]:
    """Probability that every candidate is an outlier, normalized over outcomes.

    Args:
        posteriors: Per-candidate posteriors, most extreme first.
        include_null_outcome: Also count the outcome with no outlier; with a
            single candidate the result then equals its own posterior.

    Returns:
        ``(combined, normalizer)``.

    Raises:
        InvalidParameter: No candidates, or a value outside [0, 1].
        DegenerateNormalizer: The normalizer vanishes.

    Examples:
        >>> tuple(round(v, 4) for v in combined_posterior([0.9, 0.8]))
        (0.8, 0.9)
    """
    q = np.asarray(posteriors, dtype=float)
    if q.size == 0:
        raise InvalidParameter("combined_posterior needs at least one candidate")
    if np.any((q < 0.0) | (q > 1.0)) or not np.all(np.isfinite(q)):
        raise InvalidParameter("Posteriors must lie in [0, 1]")
    normalizer = threshold_normalizer(q, include_null_outcome=include_null_outcome)
    if normalizer <= np.finfo(float).tiny:
        raise DegenerateNormalizer(
            "Normalizer over threshold outcomes is zero", normalizer=normalizer
        )
    combined = float(np.prod(q)) / normalizer
    return min(1.0, combined), normalizer


def analyse_candidates(
    data: ArrayLike,
    n_prime: int,
    spec: BayesSpec,
    *,
    side: Side = "max",
    log_transform: bool = False,
    labels: Sequence[str] | None = None,
    include_null_outcome: bool = False,
    tables: LikelihoodTables | None = None,
) -> PosteriorResult:
    """Posterior outlier probabilities for the ``n_prime`` most extreme values.

    Data are standardized by the mean and standard deviation of the
    ordinary values; candidates are chosen and ties handled as in
    :func:`hstar.stats.iut.run_trial`. Each candidate joins the ordinary
    data to form a sample of size ``n - n' + 1`` whose likelihood tables
    are simulated unless ``tables`` is given.
    """
    x = prepare_values(data, log_transform)
    if n_prime < 1 or n_prime >= x.size:
        raise InvalidParameter(f"n'={n_prime} is out of range for {x.size} values")
    oriented = -x if side == "min" else x
    order = np.argsort(-oriented, kind="stable")
    n_prime = cut_at_ties(oriented, order, n_prime)
    if x.size - n_prime < MIN_OBSERVATIONS:
        raise TooFewOrdinary(
            f"Only {x.size - n_prime} ordinary values remain; need {MIN_OBSERVATIONS}",
            n=int(x.size),
            n_prime=n_prime,
        )
    ordinary = oriented[order[n_prime:]]
    centre, scale = float(np.mean(ordinary)), float(np.std(ordinary))
    if scale == 0.0:
        scale = 1.0
    z_ordinary = (ordinary - centre) / scale
    size = ordinary.size + 1
    if tables is None or tables.n != size:
        tables = likelihood_tables(size, spec)

    per_candidate = []
    for i in order[:n_prime].tolist():
        h = h_star_of_candidate(z_ordinary, (float(oriented[i]) - centre) / scale)
        outlier, ordinary_l = marginal_likelihood(h, tables)
        per_candidate.append(
            PosteriorCandidate(
                index=i,
                label=labels[i] if labels is not None else None,
                h_obs=h,
                likelihood_outlier=outlier,
                likelihood_ordinary=ordinary_l,
                posterior=posterior_from_likelihoods(outlier, ordinary_l, spec.pi_nodes),
            )
        )
    combined, normalizer = combined_posterior(
        [c.posterior for c in per_candidate], include_null_outcome=include_null_outcome
    )
    return PosteriorResult(
        n=size,
        per_candidate=per_candidate,
        combined=combined,
        normalizer=normalizer,
        include_null_outcome=include_null_outcome,
        spec=spec,
    )
