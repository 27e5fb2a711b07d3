"""Paired before/after comparison of h* for the subjects flagged as outliers.

The pretest scan selects the outliers; every flagged subject's h* is then
computed against the same ordinary group (all subjects not flagged) before
and after treatment, and the pairs are compared with a Wilcoxon
signed-rank test.
"""

from __future__ import annotations

import logging
from typing import TYPE_CHECKING, Literal

import numpy as np
from scipy import stats

from hstar.errors import (
    AllZeroDifferences,
    HStarError,
    InvalidParameter,
    NoPretestOutliers,
    TooFewPairs,
)
from hstar.models import PairedReport, PairedStudy, TrialSpec, WilcoxonResult
from hstar.stats.distributions import fit
from hstar.stats.iut import prepare_values, scan_trials
from hstar.stats.statistic import MIN_OBSERVATIONS, h_star_of_candidate

if TYPE_CHECKING:
    from collections.abc import Mapping, Sequence

    from numpy.typing import ArrayLike

    from hstar.config import GofTest
    from hstar.stats.iut import NullSource

logger = logging.getLogger(__name__)

WilcoxonMode = Literal["normal_approx_cc", "exact"]

MIN_PAIRS = 5
MAX_EXACT_PAIRS = 25


def per_subject_h(
    scores: Mapping[str, float],
    subject: str,
    inlier_ids: Sequence[str],
    *,
    log_transform: bool = True,
) -> float:
    """h* of the inliers plus one subject, the subject being the candidate.

    Raises:
        InvalidParameter: The subject is unknown or listed among the inliers.
        TooFewObservations: Fewer than three inliers.
    """
    if subject not in scores:
        raise InvalidParameter(f"Unknown subject '{subject}'", subject=subject)
    if subject in set(inlier_ids):
        raise InvalidParameter(
            f"Subject '{subject}' is one of the inliers", subject=subject
        )
    values = prepare_values(
        [scores[i] for i in inlier_ids] + [scores[subject]], log_transform
    )
    return h_star_of_candidate(values[:-1], float(values[-1]))


def _exact_upper_tail(doubled_ranks: np.ndarray, doubled_w: int) -> tuple[float, float]:
    # number of sign assignments per attainable doubled rank sum
    total = int(doubled_ranks.sum())
    ways = np.zeros(total + 1, dtype=float)
    ways[0] = 1.0
    for r in doubled_ranks.tolist():
        ways[r:] = ways[r:] + ways[: total + 1 - r].copy()
    ways /= ways.sum()
    p_greater = float(ways[doubled_w:].sum())
    p_less = float(ways[: doubled_w + 1].sum())
    return p_greater, p_less


def wilcoxon_signed_rank(
    x_pre: ArrayLike,
    x_post: ArrayLike,
    mode: WilcoxonMode = "normal_approx_cc",
) -> WilcoxonResult:
    """Wilcoxon signed-rank test on the differences ``pre - post``.

    Zero differences are dropped and tied absolute differences share their
    midrank. ``W+`` is the sum of ranks of positive differences.

    ``normal_approx_cc`` is :func:`scipy.stats.wilcoxon` with ``method="approx"``:
    mean ``n(n+1)/4``, the tie-corrected variance and a continuity
    correction of 1/2; ``exact`` enumerates all sign
    assignments (``n <= 25``). Both give the two-sided p-value and the
    one-sided ones (``greater``: pre tends to exceed post).

    Raises:
        InvalidParameter: Unequal lengths, or exact mode with ``n > 25``.
        AllZeroDifferences: Every pair is equal.
        TooFewPairs: Fewer than five non-zero differences.

    Examples:
        >>> pre = [3.59, 4.29, 3.89, 3.81, 3.89, 2.85]
        >>> post = [2.20, 2.60, 2.34, 2.20, 2.13, 2.40]
        >>> r = wilcoxon_signed_rank(pre, post)
        >>> r.w_plus, round(r.p_two_sided, 3)
        (21.0, 0.036)
    """
    pre = np.asarray(x_pre, dtype=float).ravel()
    post = np.asarray(x_post, dtype=float).ravel()
    if pre.size != post.size:
        raise InvalidParameter(
            f"Paired samples differ in length: {pre.size} vs {post.size}"
        )
    d = pre - post
    if d.size and np.all(d == 0.0):
        raise AllZeroDifferences("All paired differences are zero", pairs=int(d.size))
    nonzero = d[d != 0.0]
    n = int(nonzero.size)
    if n < MIN_PAIRS:
        raise TooFewPairs(
            f"The signed-rank test needs {MIN_PAIRS} non-zero differences, got {n}",
            pairs=n,
        )
    ranks = stats.rankdata(np.abs(nonzero))
    w_plus = float(ranks[nonzero > 0].sum())
    w_minus = float(ranks[nonzero < 0].sum())

    z: float | None = None
    if mode == "exact":
        if n > MAX_EXACT_PAIRS:
            raise InvalidParameter(
                f"Exact mode supports at most {MAX_EXACT_PAIRS} pairs, got {n}", pairs=n
            )
        doubled = np.rint(2.0 * ranks).astype(np.int64)
        p_greater, p_less = _exact_upper_tail(doubled, int(round(2.0 * w_plus)))
    else:
        def approx(alternative: str) -> float:
            return float(
                stats.wilcoxon(
                    nonzero, correction=True, alternative=alternative, method="approx"
                ).pvalue
            )

        p_greater = approx("greater")
        p_less = approx("less")
        shift = w_plus - n * (n + 1) / 4.0
        # continuity-corrected z, recovered from the one-sided tail it came from
        if shift > 0:
            z = float(stats.norm.isf(p_greater))
        elif shift < 0:
            z = float(stats.norm.ppf(p_less))
        else:
            z = 0.0
    p_two = min(1.0, 2.0 * min(p_greater, p_less))
    logger.debug("Signed-rank %s: n=%d W+=%.1f p=%.4f", mode, n, w_plus, p_two)
    return WilcoxonResult(
        mode=mode,
        n=n,
        zeros_dropped=int(d.size - n),
        w_plus=w_plus,
        w_minus=w_minus,
        z=z,
        p_two_sided=p_two,
        p_greater=min(1.0, p_greater),
        p_less=min(1.0, p_less),
    )


def paired_pipeline(
    study: PairedStudy,
    null_source: NullSource,
    *,
    alpha: float = 0.05,
    max_candidates: int = 7,
    fit_floor: float = 0.01,
    gof_test: GofTest = "lilliefors",
    seed: int | None = None,
) -> PairedReport:
    """Scan the pretest for outliers and compare their h* before and after.

    Steps: scan the pretest (max side) and take the selected candidates as
    the outliers; scan the posttest on both sides; compute every outlier's
    h* against the non-outlier group at both times; run the signed-rank
    test on the pairs; note outliers whose posttest h* is still beyond the
    critical value at ``alpha``.

    Raises:
        NoPretestOutliers: The pretest scan selects nobody.
        InvalidParameter: Scores are not aligned with ids.
    """
    if not len(study.ids) == len(study.pre_scores) == len(study.post_scores):
        raise InvalidParameter("ids, pre_scores and post_scores must be aligned")
    trial = TrialSpec(alpha=alpha, log_transform=study.log_transform)
    scan_options = {
        "spec": trial,
        "labels": study.ids,
        "fit_floor": fit_floor,
        "gof_test": gof_test,
        "seed": seed,
    }
    pre_scan = scan_trials(
        study.pre_scores, max_candidates, null_source, sides=("max",), **scan_options
    )
    outliers = [c.label for c in pre_scan.selected.get("max", []) if c.label is not None]
    if not outliers:
        raise NoPretestOutliers(
            "The pretest scan identified no outliers; nothing to compare",
            max_candidates=max_candidates,
        )
    logger.info("Pretest outliers: %s", ", ".join(outliers))

    post_scan = scan_trials(
        study.post_scores,
        max_candidates,
        null_source,
        sides=("max", "min"),
        **scan_options,
    )
    post_outliers = {
        side: [c.label for c in chosen if c.label is not None]
        for side, chosen in post_scan.selected.items()
    }
    notes: list[str] = []
    if any(post_outliers.values()):
        notes.append(
            "posttest outliers: "
            + "; ".join(f"{s}: {', '.join(ids)}" for s, ids in post_outliers.items() if ids)
        )
    else:
        notes.append("no outliers were identified in the posttest")

    flagged = set(outliers)
    inliers = [i for i in study.ids if i not in flagged]
    pre = dict(zip(study.ids, study.pre_scores, strict=True))
    post = dict(zip(study.ids, study.post_scores, strict=True))
    h_pre = {
        i: per_subject_h(pre, i, inliers, log_transform=study.log_transform)
        for i in outliers
    }
    h_post = {
        i: per_subject_h(post, i, inliers, log_transform=study.log_transform)
        for i in outliers
    }

    approx = exact = None
    significant = None
    try:
        pairs_pre = [h_pre[i] for i in outliers]
        pairs_post = [h_post[i] for i in outliers]
        approx = wilcoxon_signed_rank(pairs_pre, pairs_post, "normal_approx_cc")
        if approx.n <= MAX_EXACT_PAIRS:
            exact = wilcoxon_signed_rank(pairs_pre, pairs_post, "exact")
        significant = approx.p_two_sided < alpha
    except (TooFewPairs, AllZeroDifferences) as e:
        logger.warning("No paired test: %s", e.message)
        notes.append(f"no paired test: {e.message}")

    critical = None
    if len(inliers) + 1 >= MIN_OBSERVATIONS:
        try:
            post_inliers = prepare_values([post[i] for i in inliers], study.log_transform)
            prior = fit(post_inliers, gof_test=gof_test).fitted
            critical = null_source.critical_value(alpha, len(inliers) + 1, prior)
        except HStarError as e:
            logger.warning("No posttest critical value: %s", e.message)
            notes.append(f"no posttest critical value: {e.message}")
    if critical is not None:
        notes.extend(
            f"{i}: posttest h*={h_post[i]:.4f} is still beyond the critical value "
            f"{critical:.4f}"
            for i in outliers
            if h_post[i] > critical
        )

    return PairedReport(
        study=study.model_copy(
            update={"outlier_ids": outliers, "h_pre": h_pre, "h_post": h_post}
        ),
        alpha=alpha,
        pre_scan=pre_scan,
        post_scan=post_scan,
        post_outliers=post_outliers,
        wilcoxon=approx,
        wilcoxon_exact=exact,
        significant=significant,
        post_critical_value=critical,
        notes=notes,
    )
