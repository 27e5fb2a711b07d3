"""Random variates and prior fitting for normal, lognormal and truncated normal laws.

Truncated-normal draws use the inverse cdf on the log scale,

    z = -ndtri_exp(log(u) + log_ndtr(-a)),   u ~ U(0, 1],

which stays accurate for bounds many standard deviations into the tail.
Goodness of fit uses statsmodels' Lilliefors-corrected Kolmogorov-Smirnov test
or, on request, the Anderson-Darling test with estimated parameters. The
latter rejects scores rounded to a few decimals because of their ties.
"""

from __future__ import annotations

import logging
import math
from typing import TYPE_CHECKING

import numpy as np
from scipy import special
from statsmodels.stats.diagnostic import lilliefors, normal_ad

from hstar.errors import (
    InvalidParameter,
    InvalidSpec,
    NonFiniteValue,
    NonPositiveValueForLognormal,
    TooFewObservations,
    TruncationInfeasible,
)
from hstar.models import DistributionKind, DistributionSpec, FitDiagnostics
from hstar.utils.rng import as_generator

if TYPE_CHECKING:
    from numpy.typing import ArrayLike, NDArray

    from hstar.config import GofTest

logger = logging.getLogger(__name__)


def check_spec(spec: DistributionSpec) -> None:
    """Raise ``InvalidSpec`` unless the parameters describe a proper law."""
    if not (math.isfinite(spec.mu) and math.isfinite(spec.sigma)):
        raise InvalidSpec("Distribution parameters must be finite", spec=spec.model_dump())
    if spec.sigma <= 0.0:
        raise InvalidSpec(f"sigma must be positive, got {spec.sigma}", sigma=spec.sigma)
    if spec.kind == "truncated_normal" and (
        spec.lower is None or not math.isfinite(spec.lower)
    ):
        raise InvalidSpec("truncated_normal needs a finite lower bound")


def truncated_normal_above(
    mu: float | NDArray[np.float64],
    sigma: float,
    lower: float | NDArray[np.float64],
    size: int | tuple[int, ...],
    rng: np.random.Generator,
) -> NDArray[np.float64]:
    """Draw from N(mu, sigma^2) conditioned on exceeding ``lower``.

    ``mu`` and ``lower`` broadcast against ``size``. Every draw is strictly
    greater than its bound.

    Raises:
        TruncationInfeasible: The tail mass above a bound underflows.
    """
    a = (np.asarray(lower, dtype=float) - mu) / sigma
    log_tail = special.log_ndtr(-a)
    if not np.all(np.isfinite(log_tail)):
        raise TruncationInfeasible(
            "Tail mass above the truncation bound is not representable",
            max_standardized_bound=float(np.max(a)),
        )
    u = 1.0 - rng.random(size)
    z = -special.ndtri_exp(np.log(u) + log_tail)
    z = np.maximum(z, np.nextafter(a, np.inf))
    x = mu + sigma * z
    return np.maximum(x, np.nextafter(np.asarray(lower, dtype=float), np.inf))


def sample(
    spec: DistributionSpec,
    count: int | tuple[int, ...],
    seed: int | np.random.Generator,
) -> NDArray[np.float64]:
    """Draw variates from ``spec``.

    Args:
        spec: Law to draw from.
        count: Number of draws, or an array shape.
        seed: Root seed or a generator (see :mod:`hstar.utils.rng`).

    Returns:
        Array of draws; identical arguments give identical output.

    Raises:
        InvalidSpec: Parameters are not valid.
        InvalidParameter: ``count`` is not positive.
    """
    check_spec(spec)
    shape = (count,) if isinstance(count, int) else tuple(count)
    if any(c < 1 for c in shape):
        raise InvalidParameter(f"count must be positive, got {count}")
    rng = as_generator(seed)
    if spec.kind == "normal":
        return rng.normal(spec.mu, spec.sigma, shape)
    if spec.kind == "lognormal":
        return rng.lognormal(spec.mu, spec.sigma, shape)
    assert spec.lower is not None
    return truncated_normal_above(spec.mu, spec.sigma, spec.lower, shape, rng)


def _gof(y: NDArray[np.float64], gof_test: GofTest) -> tuple[float, float]:
    if gof_test == "lilliefors":
        statistic, p_value = lilliefors(y, dist="norm", pvalmethod="table")
    else:
        statistic, p_value = normal_ad(y)
    return float(statistic), float(min(max(p_value, 0.0), 1.0))


def fit(
    values: ArrayLike,
    kind: DistributionKind = "normal",
    gof_test: GofTest = "lilliefors",
) -> FitDiagnostics:
    """Fit a prior by maximum likelihood and test the fit.

    Normal fits use the sample mean and the ddof=0 standard deviation;
    lognormal fits do the same on the logs. Q-Q points pair Blom plotting
    positions ``(i - 3/8) / (m + 1/4)`` of the fitted law with the sorted
    values.

    Raises:
        TooFewObservations: Fewer than four values.
        NonPositiveValueForLognormal: A lognormal fit sees a value <= 0.
        InvalidSpec: The values are constant, or ``kind`` cannot be fitted.
    """
    x = np.asarray(values, dtype=float).ravel()
    if x.size < 4:
        raise TooFewObservations(f"Fitting needs at least 4 values, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise NonFiniteValue("Cannot fit non-finite values")
    if kind == "truncated_normal":
        raise InvalidSpec("Fitting a truncated normal prior is not supported")
    if kind == "lognormal":
        if np.any(x <= 0.0):
            raise NonPositiveValueForLognormal(
                "Lognormal fits require positive values",
                index=int(np.flatnonzero(x <= 0.0)[0]),
            )
        y = np.log(x)
    else:
        y = x
    mu = float(np.mean(y))
    sigma = float(np.std(y))
    if sigma == 0.0:
        raise InvalidSpec("Cannot fit a constant vector (sigma = 0)")

    statistic, p_value = _gof(y, gof_test)
    positions = (np.arange(1, x.size + 1) - 0.375) / (x.size + 0.25)
    theoretical = mu + sigma * special.ndtri(positions)
    if kind == "lognormal":
        theoretical = np.exp(theoretical)
    qq = list(zip(theoretical.tolist(), np.sort(x).tolist(), strict=True))
    fitted = DistributionSpec(kind=kind, mu=mu, sigma=sigma)
    logger.debug(
        "Fitted %s mu=%.4f sigma=%.4f (%s p=%.4f)", kind, mu, sigma, gof_test, p_value
    )
    return FitDiagnostics(
        fitted=fitted,
        gof_test=gof_test,
        gof_statistic=statistic,
        gof_p_value=p_value,
        qq_points=qq,
    )
