"""Exact computation of h* and its variants.

h* compares the root-mean-square distance from the candidate outlier to the
ordinary values with the root-mean-square pairwise distance among the
ordinary values:

    h* = sqrt( (sum_k (X_k - X*)^2 / (n - 1))
             / (sum_{i>j, ordinary} (X_i - X_j)^2 / ((n - 1)(n - 2) / 2)) )

where X* is the sample maximum (the minimum is handled by negating the
data). Exactly one instance of the maximum is the candidate; duplicates stay
in the ordinary set. All functions here are pure.
"""

from __future__ import annotations

import logging
import math
from typing import NamedTuple

import numpy as np
from numpy.typing import ArrayLike, NDArray

from hstar.errors import (
    AllValuesIdentical,
    InvalidParameter,
    NonFiniteValue,
    NonpositiveEta,
    TooFewObservations,
    ZeroWeightMass,
)
from hstar.models import HStarOutcome, Sample, Side, WeightSpec

logger = logging.getLogger(__name__)

MIN_OBSERVATIONS = 4
SUPPORT_MINIMUM = 1.0 / math.sqrt(2.0)

FloatArray = NDArray[np.float64]


class DifferenceSpace(NamedTuple):
    """Distances from the candidate to each ordinary order statistic."""

    u: FloatArray
    q: float
    r2: float
    q_over_r_sq: float
    h_tilde: float


def as_sample(sample: Sample | ArrayLike, side: Side = "max") -> Sample:
    """Wrap raw values in a ``Sample``; pass samples through unchanged."""
    if isinstance(sample, Sample):
        return sample
    return Sample(values=np.asarray(sample, dtype=float).ravel().tolist(), side=side)


def oriented_values(sample: Sample | ArrayLike, side: Side = "max") -> FloatArray:
    """Validate a sample and return values with the candidate side on top.

    Raises:
        TooFewObservations: Fewer than four values.
        NonFiniteValue: A value is NaN or infinite.
        AllValuesIdentical: Every value is the same.
    """
    s = as_sample(sample, side)
    x = np.asarray(s.values, dtype=float)
    if x.size < MIN_OBSERVATIONS:
        raise TooFewObservations(
            f"h* needs at least {MIN_OBSERVATIONS} values, got {x.size}", n=int(x.size)
        )
    if not np.all(np.isfinite(x)):
        bad = int(np.flatnonzero(~np.isfinite(x))[0])
        raise NonFiniteValue(f"Value at position {bad} is not finite", index=bad)
    if np.ptp(x) == 0.0:
        raise AllValuesIdentical("h* is undefined when all values are identical")
    return -x if s.side == "min" else x


def _split(x: FloatArray) -> tuple[FloatArray, float, int]:
    idx = int(np.argmax(x))
    return np.delete(x, idx), float(x[idx]), idx


def h_tilde_of(h_star: float, n: int) -> float:
    """Rescale h* to h~* = sqrt(2 / (n - 2)) h*."""
    return math.sqrt(2.0 / (n - 2)) * h_star


def _q_over_r_sq(h_star: float, n: int) -> float:
    if math.isinf(h_star):
        return float(n - 1)
    ht = h_tilde_of(h_star, n)
    return (n - 1) - 1.0 / (ht * ht)


def _outcome(h: float, n: int, candidate: float, degenerate: bool) -> HStarOutcome:
    return HStarOutcome(
        h_star=h,
        h_tilde=h_tilde_of(h, n),
        n=n,
        nu=n - 2,
        q_over_r_sq=_q_over_r_sq(h, n),
        candidate_value=candidate,
        degenerate=degenerate,
    )


def h_star_definitional(sample: Sample | ArrayLike) -> HStarOutcome:
    """Compute h* by summing every pairwise squared difference.

    O(n^2) in time and memory; the reference the faster forms are checked
    against.

    Args:
        sample: Values (or a ``Sample`` with its side).

    Returns:
        The statistic with its rescaled forms.

    Raises:
        TooFewObservations: Fewer than four values.
        AllValuesIdentical: Every value is the same.

    Examples:
        >>> round(h_star_definitional([3, 4, 5, 8]).h_star, 4)
        2.8868
        >>> h_star_definitional([0, 0, 0, 7]).h_star
        inf
    """
    s = as_sample(sample)
    x = oriented_values(s)
    n = x.size
    ordinary, candidate, _ = _split(x)
    numerator = float(np.sum((ordinary - candidate) ** 2)) / (n - 1)
    upper = np.triu_indices(n - 1, k=1)
    pairwise = (ordinary[:, None] - ordinary[None, :])[upper]
    denominator = float(np.sum(pairwise**2)) / ((n - 1) * (n - 2) / 2)
    reported = -candidate if s.side == "min" else candidate
    if denominator == 0.0:
        return _outcome(math.inf, n, reported, degenerate=True)
    return _outcome(math.sqrt(numerator / denominator), n, reported, degenerate=False)


def h_star_algebraic(sample: Sample | ArrayLike) -> HStarOutcome:
    """Compute h* from sums and sums of squares.

    Uses

        h* = sqrt((n-2)/2) * sqrt( (S2 - 2 X* S1 + n X*^2)
                                 / ((n-1)(S2 - X*^2) - (S1 - X*)^2) )

    with S1, S2 accumulated on values shifted by their mean, which leaves h*
    unchanged and keeps the differences well conditioned.

    Examples:
        >>> round(h_star_algebraic([3, 4, 5, 8]).h_star, 4)
        2.8868
    """
    s = as_sample(sample)
    x = oriented_values(s)
    n = x.size
    ordinary, candidate, _ = _split(x)
    reported = -candidate if s.side == "min" else candidate
    if np.ptp(ordinary) == 0.0:
        return _outcome(math.inf, n, reported, degenerate=True)
    shift = float(np.mean(x))
    y = x - shift
    c = candidate - shift
    s1 = float(np.sum(y))
    s2 = float(np.sum(y * y))
    numerator = s2 - 2.0 * c * s1 + n * c * c
    denominator = (n - 1) * (s2 - c * c) - (s1 - c) ** 2
    if denominator <= 0.0:
        return _outcome(math.inf, n, reported, degenerate=True)
    h = math.sqrt((n - 2) / 2.0) * math.sqrt(numerator / denominator)
    return _outcome(h, n, reported, degenerate=False)


def difference_space(sample: Sample | ArrayLike) -> DifferenceSpace:
    """Express the sample as distances from the candidate.

    ``U_k = X* - X_(k)`` over the ascending ordinary order statistics,
    ``Q = sum U``, ``R^2 = sum U^2`` and ``h~* = 1 / sqrt((n - 1) - Q^2/R^2)``.
    ``(n - 1) R^2 - Q^2`` is evaluated as ``(n - 1) * sum (U - mean U)^2``.

    Examples:
        >>> ds = difference_space([3, 4, 5, 8])
        >>> ds.u.tolist(), ds.q, ds.r2, round(ds.q_over_r_sq, 2)
        ([5.0, 4.0, 3.0], 12.0, 50.0, 2.88)
    """
    x = oriented_values(sample)
    n = x.size
    ordered = np.sort(x)
    candidate = float(ordered[-1])
    u = candidate - ordered[:-1]
    q = float(np.sum(u))
    r2 = float(np.sum(u * u))
    ratio = q * q / r2
    spread = float(np.sum((u - np.mean(u)) ** 2))
    if spread == 0.0:
        return DifferenceSpace(u, q, r2, float(n - 1), math.inf)
    h_tilde = math.sqrt(r2 / ((n - 1) * spread))
    return DifferenceSpace(u, q, r2, min(ratio, float(n - 1)), h_tilde)


def h_star_of_candidate(ordinary: ArrayLike, candidate: float) -> float:
    """h* of ``ordinary + [candidate]`` with ``candidate`` as X*.

    The candidate need not be the largest value. With ``m`` ordinary values
    of mean ``o`` this is

        sqrt( (var_0 + (o - candidate)^2) / (2 var_1) )

    where ``var_0`` and ``var_1`` are the ddof=0 and ddof=1 variances.
    """
    o = np.asarray(ordinary, dtype=float)
    if o.size + 1 < MIN_OBSERVATIONS:
        raise TooFewObservations(
            f"h* needs at least {MIN_OBSERVATIONS} values, got {o.size + 1}",
            n=int(o.size + 1),
        )
    centre = float(np.mean(o))
    ss = float(np.sum((o - centre) ** 2))
    if ss == 0.0:
        if candidate == centre:
            raise AllValuesIdentical("h* is undefined when all values are identical")
        return math.inf
    m = o.size
    numerator = ss / m + (centre - candidate) ** 2
    return math.sqrt(numerator / (2.0 * ss / (m - 1)))


def h_star_from_ordinary_moments(
    s1: FloatArray, s2: FloatArray, m: int, candidate: FloatArray
) -> FloatArray:
    """Vectorised h* from the sums of ``m`` ordinary values and a candidate."""
    centre = s1 / m
    ss = np.maximum(s2 - s1 * centre, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = (ss / m + (centre - candidate) ** 2) / (2.0 * ss / (m - 1))
    return np.where(ss > 0.0, np.sqrt(ratio), np.inf)


def h_star_batch(matrix: ArrayLike) -> FloatArray:
    """h* of every row, each row's maximum being its candidate.

    Rows are shifted by their mean before accumulating, as in
    :func:`h_star_algebraic`.

    Args:
        matrix: Array of shape ``(rows, n)`` with ``n >= 4``.

    Returns:
        Array of ``rows`` statistics; ``inf`` where the ordinary values of
        a row have zero spread.
    """
    x = np.asarray(matrix, dtype=float)
    if x.ndim != 2 or x.shape[1] < MIN_OBSERVATIONS:
        raise TooFewObservations(
            f"h* needs rows of at least {MIN_OBSERVATIONS} values", shape=list(x.shape)
        )
    n = x.shape[1]
    y = x - x.mean(axis=1, keepdims=True)
    candidate = y.max(axis=1)
    s1 = y.sum(axis=1) - candidate
    s2 = np.einsum("ij,ij->i", y, y) - candidate * candidate
    return h_star_from_ordinary_moments(s1, s2, n - 1, candidate)


def _candidate_weights(weights: WeightSpec, n: int, cand_idx: int) -> FloatArray:
    if weights.candidate_weights is None:
        return np.ones(n - 1)
    w = np.asarray(weights.candidate_weights, dtype=float)
    if w.size == n:
        w = np.delete(w, cand_idx)
    elif w.size != n - 1:
        raise InvalidParameter(
            f"Expected {n} or {n - 1} candidate weights, got {w.size}", got=int(w.size)
        )
    return w


def _pair_weights(
    weights: WeightSpec, w_candidate: FloatArray, n: int, cand_idx: int
) -> FloatArray:
    upper = np.triu_indices(n - 1, k=1)
    if weights.pair_rule == "geometric_mean":
        return np.sqrt(np.outer(w_candidate, w_candidate))[upper]
    if weights.pair_weights is None:
        raise InvalidParameter("pair_rule 'explicit' requires pair_weights")
    matrix = np.asarray(weights.pair_weights, dtype=float)
    if matrix.shape != (n, n):
        raise InvalidParameter(
            f"pair_weights must be {n}x{n}", shape=list(matrix.shape)
        )
    keep = np.delete(np.arange(n), cand_idx)
    sub = matrix[np.ix_(keep, keep)]
    # explicit matrices may be filled on either triangle
    return np.maximum(sub, sub.T)[upper]


def _generalized(x: FloatArray, weights: WeightSpec, eta: float) -> float:
    n = x.size
    ordinary, candidate, cand_idx = _split(x)
    w_k = _candidate_weights(weights, n, cand_idx)
    w_ij = _pair_weights(weights, w_k, n, cand_idx)
    if np.any(w_k < 0) or np.any(w_ij < 0) or not np.all(np.isfinite(w_k)):
        raise InvalidParameter("Weights must be finite and non-negative")
    mass_k = float(np.sum(w_k))
    mass_ij = float(np.sum(w_ij))
    if mass_k == 0.0 or mass_ij == 0.0:
        raise ZeroWeightMass(
            "Weights sum to zero", candidate_mass=mass_k, pair_mass=mass_ij
        )
    upper = np.triu_indices(n - 1, k=1)
    pair_dist = np.abs(ordinary[:, None] - ordinary[None, :])[upper]
    numerator = float(np.sum(w_k * np.abs(ordinary - candidate) ** eta)) / mass_k
    denominator = float(np.sum(w_ij * pair_dist**eta)) / mass_ij
    if denominator == 0.0:
        return math.inf
    return float((numerator / denominator) ** (1.0 / eta))


def h_star_weighted(sample: Sample | ArrayLike, weights: WeightSpec) -> float:
    """Weighted h*: weighted mean squares in numerator and denominator.

    Pair weights default to the geometric mean of the two candidate weights.
    The normalising sums run over the ordinary values only, so unit weights
    give the plain statistic.

    Raises:
        InvalidParameter: ``weights.eta`` is not 2 (use
            :func:`h_star_generalized`), or weights are malformed.
        ZeroWeightMass: A normalising weight sum is zero.

    Examples:
        >>> round(h_star_weighted([3, 4, 5, 8], WeightSpec()), 4)
        2.8868
    """
    if weights.eta != 2.0:
        raise InvalidParameter(
            "h_star_weighted uses eta = 2; call h_star_generalized for other exponents",
            eta=weights.eta,
        )
    return _generalized(oriented_values(sample), weights, 2.0)


def h_star_generalized(sample: Sample | ArrayLike, weights: WeightSpec) -> float:
    """Hölder-mean h*: weighted means of ``|d|^eta``, then the 1/eta power.

    Examples:
        >>> h_star_generalized([3, 4, 5, 8], WeightSpec(eta=1.0))
        3.0
    """
    if not weights.eta > 0.0:
        raise NonpositiveEta(f"eta must be positive, got {weights.eta}", eta=weights.eta)
    return _generalized(oriented_values(sample), weights, weights.eta)
