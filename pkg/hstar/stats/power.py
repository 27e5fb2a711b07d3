"""Power curves, the accumulation study and their regression summaries.

Power at ``(effect, CL, n)`` is the fraction of simulated samples (``n - 1``
standard normal values plus one value shifted by ``effect``) whose h*
exceeds the critical value at level ``1 - CL``. Every effect size and
confidence level at a given ``n`` reuses the same draws, so curves are
compared on common random numbers.
"""

from __future__ import annotations

import logging
import math
from typing import TYPE_CHECKING, Literal

import numpy as np
import pandas as pd
import statsmodels.api as sm

from hstar.errors import DegenerateDesign, InvalidParameter
from hstar.models import (
    AccumulationPoint,
    AccumulationSpec,
    DistributionSpec,
    PowerPoint,
    PowerStudySpec,
    RegressionSummary,
)
from hstar.stats.distributions import truncated_normal_above
from hstar.stats.statistic import (
    MIN_OBSERVATIONS,
    h_star_batch,
    h_star_from_ordinary_moments,
)
from hstar.utils.rng import derive

if TYPE_CHECKING:
    from collections.abc import Sequence

    from hstar.stats.iut import NullSource

logger = logging.getLogger(__name__)

XTransform = Literal["log10_n", "sqrt_n", "loglog"]

NORMAL = DistributionSpec(kind="normal")
MIN_REGRESSION_POINTS = 5
DEFAULT_WINDOW_START = 20


def _check_grid(n_values: Sequence[int]) -> None:
    if not n_values:
        raise InvalidParameter("The n grid is empty")
    if min(n_values) < MIN_OBSERVATIONS:
        raise InvalidParameter(
            f"Sample sizes must be >= {MIN_OBSERVATIONS}", n_min=int(min(n_values))
        )


def power_curve(spec: PowerStudySpec, null_source: NullSource) -> list[PowerPoint]:
    """Estimate power over effect sizes, confidence levels and sample sizes.

    Args:
        spec: Study grid, trials per ``n`` and root seed.
        null_source: Provider of critical values for the normal prior.

    Returns:
        One point per ``(effect, CL, n)``, ordered by effect, CL, then n.

    Raises:
        InvalidParameter: A negative effect, a level outside (0, 1) or a
            sample size below 4.
    """
    _check_grid(spec.n_values)
    if any(e < 0 for e in spec.effect_sizes):
        raise InvalidParameter("Effect sizes must be non-negative")
    if any(not 0.0 < cl < 1.0 for cl in spec.confidence_levels):
        raise InvalidParameter("Confidence levels must lie in (0, 1)")

    points: list[PowerPoint] = []
    for n in sorted(set(spec.n_values)):
        rng = derive(spec.seed, "power", n)
        ordinary = rng.standard_normal((spec.trials, n - 1))
        noise = rng.standard_normal(spec.trials)
        critical = {
            cl: null_source.critical_value(1.0 - cl, n, NORMAL)
            for cl in spec.confidence_levels
        }
        for effect in spec.effect_sizes:
            h = h_star_batch(np.column_stack([ordinary, noise + effect]))
            for cl, h_crit in critical.items():
                points.append(
                    PowerPoint(
                        effect=effect, cl=cl, n=n, power=float(np.mean(h > h_crit))
                    )
                )
        logger.debug("Power computed for n=%d", n)
    points.sort(key=lambda p: (p.effect, p.cl, p.n))
    logger.info(
        "Power curve: %d effects x %d levels x %d sizes, %d trials each",
        len(spec.effect_sizes),
        len(spec.confidence_levels),
        len(set(spec.n_values)),
        spec.trials,
    )
    return points


def accumulation_study(
    spec: AccumulationSpec, null_source: NullSource
) -> list[AccumulationPoint]:
    """Track h* while ordinary data accumulate around one fixed outlier.

    In every trial the ordinary values for the largest scheduled size are
    drawn first; the outlier is then drawn once from ``N(effect, 1)``
    conditioned on exceeding all of them, and held fixed while the sample
    grows along ``n_schedule``.

    Raises:
        InvalidParameter: The schedule is not strictly increasing or starts
            below 4.
        TruncationInfeasible: The outlier's bound is out of numerical range.
    """
    schedule = list(spec.n_schedule)
    _check_grid(schedule)
    if any(b <= a for a, b in zip(schedule, schedule[1:])):
        raise InvalidParameter("n_schedule must be strictly increasing")

    rng = derive(spec.seed, "accumulate")
    ordinary = rng.standard_normal((spec.trials, schedule[-1] - 1))
    outlier = truncated_normal_above(
        spec.effect_size, 1.0, ordinary.max(axis=1), spec.trials, rng
    )
    s1 = np.cumsum(ordinary, axis=1)
    s2 = np.cumsum(ordinary * ordinary, axis=1)

    points = []
    for n in schedule:
        m = n - 1
        h = h_star_from_ordinary_moments(s1[:, m - 1], s2[:, m - 1], m, outlier)
        h_crit = null_source.critical_value(spec.alpha, n, NORMAL)
        mean_h = float(np.mean(h))
        points.append(
            AccumulationPoint(
                effect=spec.effect_size,
                n=n,
                mean_h=mean_h,
                sd_h=float(np.std(h, ddof=1)),
                mean_htilde=math.sqrt(2.0 / (n - 2)) * mean_h,
                power=float(np.mean(h > h_crit)),
            )
        )
    logger.info(
        "Accumulation study: effect=%g, %d sizes up to n=%d, %d trials",
        spec.effect_size,
        len(schedule),
        schedule[-1],
        spec.trials,
    )
    return points


def regress_xy(x: Sequence[float], y: Sequence[float]) -> tuple[float, float, float, float]:
    """Ordinary least squares of ``y`` on ``x``.

    Returns:
        ``(slope, intercept, r2, adjusted_r2)``.

    Raises:
        DegenerateDesign: Fewer than five points or a constant ``x``.

    Examples:
        >>> regress_xy([1, 2, 3, 4, 5], [3, 5, 7, 9, 11])[:2]
        (2.0, 1.0)
    """
    xs = np.asarray(x, dtype=float)
    ys = np.asarray(y, dtype=float)
    if xs.size < MIN_REGRESSION_POINTS:
        raise DegenerateDesign(
            f"Regression needs at least {MIN_REGRESSION_POINTS} points, got {xs.size}",
            points=int(xs.size),
        )
    if np.ptp(xs) == 0.0:
        raise DegenerateDesign("Regression design is constant in x")
    model = sm.OLS(ys, sm.add_constant(xs)).fit()
    intercept, slope = (float(v) for v in model.params)
    return round(slope, 12), round(intercept, 12), float(model.rsquared), float(
        model.rsquared_adj
    )


def regress(
    points: Sequence[AccumulationPoint],
    x_transform: XTransform = "log10_n",
    *,
    n_min: int = DEFAULT_WINDOW_START,
    n_max: int | None = None,
) -> RegressionSummary:
    """Fit a straight line to an accumulation curve inside ``[n_min, n_max]``.

    ``log10_n`` and ``sqrt_n`` regress mean h* on the transformed size;
    ``loglog`` regresses ``log(mean h~*)`` on ``log n``, whose slope is the
    exponent of the power law ``a * n^b``.

    Raises:
        DegenerateDesign: Fewer than five points fall in the window.
    """
    window = [
        p for p in points if p.n >= n_min and (n_max is None or p.n <= n_max)
    ]
    n = np.array([p.n for p in window], dtype=float)
    if x_transform == "log10_n":
        x, y = np.log10(n), np.array([p.mean_h for p in window])
    elif x_transform == "sqrt_n":
        x, y = np.sqrt(n), np.array([p.mean_h for p in window])
    elif x_transform == "loglog":
        x, y = np.log(n), np.log([p.mean_htilde for p in window])
    else:
        raise InvalidParameter(f"Unknown x_transform '{x_transform}'")
    slope, intercept, r2, adjusted = regress_xy(x, y)
    effects = {p.effect for p in window}
    return RegressionSummary(
        effect=effects.pop() if len(effects) == 1 else None,
        x_transform=x_transform,
        slope=slope,
        intercept=intercept,
        r2=r2,
        adjusted_r2=adjusted,
        n_min=int(n.min()),
        n_max=int(n.max()),
        points=int(n.size),
    )


def power_frame(points: Sequence[PowerPoint]) -> pd.DataFrame:
    """Power points as an ``effect,cl,n,power`` frame."""
    return pd.DataFrame(
        [p.model_dump() for p in points], columns=["effect", "cl", "n", "power"]
    )


def accumulation_frame(points: Sequence[AccumulationPoint]) -> pd.DataFrame:
    """Accumulation points as an ``effect,n,mean_h,sd_h,mean_htilde,power`` frame."""
    return pd.DataFrame(
        [p.model_dump() for p in points],
        columns=["effect", "n", "mean_h", "sd_h", "mean_htilde", "power"],
    )
