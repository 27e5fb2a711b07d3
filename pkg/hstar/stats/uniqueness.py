"""I-index of novelty and the h* x I classification.

``I = f / n0`` is the share of an initial sample of size ``n0`` in which a
feature occurs ``f`` times. A feature stays novel while further sampling
keeps its cumulative frequency at or below ``1 / n0``.
"""

from __future__ import annotations

import logging

from hstar.errors import InvalidCounts, InvalidParameter
from hstar.models import (
    NoveltyCheck,
    NoveltyCheckpoint,
    NoveltyOverall,
    NoveltyVerdict,
    Quadrant,
    UniquenessIndex,
)

logger = logging.getLogger(__name__)


def i_index(f: int, n0: int) -> float:
    """Return ``f / n0``.

    Raises:
        InvalidCounts: Unless ``1 <= f <= n0``.

    Examples:
        >>> i_index(1, 10)
        0.1
    """
    if n0 < 1 or f < 1 or f > n0:
        raise InvalidCounts(f"Need 1 <= f <= n0, got f={f}, n0={n0}", f=f, n0=n0)
    return f / n0


def _validate(idx: UniquenessIndex) -> None:
    i_index(idx.f, idx.n0)
    previous = idx.n0
    for n_cum, f_cum in idx.cumulative_samples:
        if n_cum <= previous:
            raise InvalidCounts(
                f"Cumulative sample sizes must increase past {previous}, got {n_cum}",
                n_cum=n_cum,
            )
        if not 0 <= f_cum <= n_cum:
            raise InvalidCounts(
                f"Occurrences {f_cum} do not fit a sample of {n_cum}",
                n_cum=n_cum,
                f_cum=f_cum,
            )
        if idx.universe is not None and n_cum > idx.universe:
            raise InvalidCounts(
                f"Cumulative sample {n_cum} exceeds the population {idx.universe}",
                n_cum=n_cum,
                universe=idx.universe,
            )
        previous = n_cum


def novelty_holds(idx: UniquenessIndex) -> NoveltyCheck:
    """Compare ``1 / n0`` with the cumulative frequency at every checkpoint.

    A checkpoint ``(n_cum, f_cum)`` holds when ``1 / n0 > f_cum / n_cum``, is
    equal on equality and is violated otherwise; the comparison is made on
    integers. Overall the check is violated if any checkpoint is, equal if
    all are, holds otherwise, and is untested without checkpoints.

    Raises:
        InvalidCounts: The counts are inconsistent.

    Examples:
        >>> idx = UniquenessIndex(f=1, n0=10, cumulative_samples=[(100, 10), (1000, 100)])
        >>> novelty_holds(idx).overall
        'Equal'
    """
    _validate(idx)
    checkpoints = []
    for n_cum, f_cum in idx.cumulative_samples:
        lhs, rhs = n_cum, f_cum * idx.n0
        verdict: NoveltyVerdict = (
            "Holds" if lhs > rhs else "Equal" if lhs == rhs else "Violated"
        )
        checkpoints.append(
            NoveltyCheckpoint(
                n_cum=n_cum,
                f_cum=f_cum,
                reference=1.0 / idx.n0,
                observed=f_cum / n_cum,
                verdict=verdict,
            )
        )
    verdicts = {c.verdict for c in checkpoints}
    overall: NoveltyOverall
    if not verdicts:
        overall = "Untested"
    elif "Violated" in verdicts:
        overall = "Violated"
    elif verdicts == {"Equal"}:
        overall = "Equal"
    else:
        overall = "Holds"
    logger.debug("Novelty check over %d checkpoints: %s", len(checkpoints), overall)
    return NoveltyCheck(
        i_index=i_index(idx.f, idx.n0), checkpoints=checkpoints, overall=overall
    )


def classify_quadrant(h_significant: bool, i_value: float, i_threshold: float) -> Quadrant:
    """Place an observation in one of the four h* x I quadrants.

    Examples:
        >>> classify_quadrant(True, 0.001, 0.05)
        'unique-genius'
    """
    if not 0.0 < i_threshold <= 1.0:
        raise InvalidParameter(
            f"i_threshold must lie in (0, 1], got {i_threshold}", i_threshold=i_threshold
        )
    high_i = i_value >= i_threshold
    if h_significant:
        return "recurring-exceptional" if high_i else "unique-genius"
    return "common-above-average" if high_i else "rare-ordinary"
