"""Outlier identification by intersection-union testing.

A trial removes the ``n'`` most extreme values on one side, fits the prior
to what is left (the ordinary data) and tests each candidate separately:
ordinary data plus that one candidate form a sample of size ``n - n' + 1``
whose h* is referred to the null distribution of that size. The candidates
are declared outliers collectively only when every one of those tests
rejects.
"""

from __future__ import annotations

import logging
from typing import TYPE_CHECKING, Literal, Protocol

import numpy as np

from hstar.errors import (
    FitRejected,
    HStarError,
    InvalidParameter,
    NonFiniteValue,
    NonPositiveValueForLognormal,
    TooFewOrdinary,
)
from hstar.models import (
    Candidate,
    CandidateResult,
    DistributionSpec,
    ScanResult,
    Side,
    TrialError,
    TrialReport,
    TrialSpec,
)
from hstar.stats.distributions import fit
from hstar.stats.statistic import MIN_OBSERVATIONS, h_star_of_candidate

if TYPE_CHECKING:
    from collections.abc import Sequence

    from numpy.typing import ArrayLike

    from hstar.config import GofTest

logger = logging.getLogger(__name__)

ReportFormat = Literal["text", "json"]


class NullSource(Protocol):
    """Anything that can refer h* to its null distribution."""

    def p_value(
        self, h_obs: float, n: int, prior: DistributionSpec, side: Side = "max"
    ) -> float: ...

    def critical_value(
        self, alpha: float, n: int, prior: DistributionSpec, side: Side = "max"
    ) -> float: ...


def prepare_values(data: ArrayLike, log_transform: bool) -> np.ndarray:
    """Check values for finiteness and apply the optional natural log."""
    x = np.asarray(data, dtype=float).ravel()
    if not np.all(np.isfinite(x)):
        bad = int(np.flatnonzero(~np.isfinite(x))[0])
        raise NonFiniteValue(f"Value at position {bad} is not finite", index=bad)
    if log_transform:
        if np.any(x <= 0.0):
            bad = int(np.flatnonzero(x <= 0.0)[0])
            raise NonPositiveValueForLognormal(
                f"Log transform needs positive values; position {bad} is {x[bad]}",
                index=bad,
            )
        return np.log(x)
    return x


def cut_at_ties(oriented: np.ndarray, order: np.ndarray, n_prime: int) -> int:
    """Extend ``n_prime`` so no value tied with the last candidate stays ordinary."""
    last = oriented[order[n_prime - 1]]
    while n_prime < oriented.size and oriented[order[n_prime]] == last:
        n_prime += 1
    return n_prime


def run_trial(
    data: ArrayLike,
    spec: TrialSpec,
    null_source: NullSource,
    *,
    labels: Sequence[str] | None = None,
    fit_floor: float = 0.01,
    gof_test: GofTest = "lilliefors",
    strict_fit: bool = False,
) -> TrialReport:
    """Run one outlier-identification trial.

    Args:
        data: Observations in input units.
        spec: Side, number of candidates, prior, level and transform.
        null_source: Provider of p-values (usually a
            :class:`~hstar.utils.table_cache.NullDistributionCache`).
        labels: Optional ids aligned with ``data``.
        fit_floor: GoF p-value below which the decision is withheld.
        gof_test: Goodness-of-fit test for the prior.
        strict_fit: Raise ``FitRejected`` instead of withholding.

    Returns:
        The trial report. ``decision`` is ``None`` when the fit is rejected.

    Raises:
        TooFewOrdinary: Fewer than four ordinary values remain.
        FitRejected: The fit is rejected and ``strict_fit`` is set.
        NonPositiveValueForLognormal: A log transform or lognormal prior
            meets a value <= 0.
    """
    x = prepare_values(data, spec.log_transform)
    n = x.size
    if labels is not None and len(labels) != n:
        raise InvalidParameter(
            f"Got {len(labels)} labels for {n} values", labels=len(labels), n=n
        )
    oriented = -x if spec.side == "min" else x
    order = np.argsort(-oriented, kind="stable")
    if spec.n_prime >= n:
        raise TooFewOrdinary(
            f"n'={spec.n_prime} leaves no ordinary data out of {n} values",
            n=n,
            n_prime=spec.n_prime,
        )

    notices: list[str] = []
    n_prime = cut_at_ties(oriented, order, spec.n_prime)
    if n_prime != spec.n_prime:
        notices.append(
            f"n' raised from {spec.n_prime} to {n_prime}: values tied at the cut "
            "join the candidate set"
        )
        logger.info("Tie at the cut: n' %d -> %d", spec.n_prime, n_prime)
    if n - n_prime < MIN_OBSERVATIONS:
        raise TooFewOrdinary(
            f"Only {n - n_prime} ordinary values remain; need {MIN_OBSERVATIONS}",
            n=n,
            n_prime=n_prime,
        )

    cand_idx = order[:n_prime]
    ordinary_idx = np.sort(order[n_prime:])
    raw = np.asarray(data, dtype=float).ravel()
    diagnostics = fit(x[ordinary_idx], kind=spec.prior, gof_test=gof_test)

    decision_allowed = True
    if diagnostics.gof_p_value < fit_floor:
        message = (
            f"{gof_test} p={diagnostics.gof_p_value:.4f} is below {fit_floor}; "
            "re-examine the prior or the data"
        )
        if strict_fit:
            raise FitRejected(
                message, gof_p_value=diagnostics.gof_p_value, fit_floor=fit_floor
            )
        logger.warning("Decision withheld: %s", message)
        notices.append(f"decision withheld: {message}")
        decision_allowed = False

    ordinary = oriented[ordinary_idx]
    size = ordinary.size + 1
    prior = diagnostics.fitted
    candidates: list[Candidate] = []
    results: list[CandidateResult] = []
    for i in cand_idx.tolist():
        label = labels[i] if labels is not None else None
        h = h_star_of_candidate(ordinary, float(oriented[i]))
        p = null_source.p_value(h, size, prior, spec.side)
        candidates.append(
            Candidate(index=i, label=label, value=float(raw[i]), analysed_value=float(x[i]))
        )
        results.append(
            CandidateResult(
                index=i, label=label, h_star=h, p_value=p, degenerate=bool(np.isinf(h))
            )
        )

    decision = None
    if decision_allowed:
        decision = (
            "Reject" if max(r.p_value for r in results) < spec.alpha else "DoNotReject"
        )
    logger.info(
        "Trial side=%s n'=%d: max p=%.4f -> %s",
        spec.side,
        n_prime,
        max(r.p_value for r in results),
        decision,
    )
    return TrialReport(
        side=spec.side,
        n=n,
        requested_n_prime=spec.n_prime,
        n_prime=n_prime,
        alpha=spec.alpha,
        prior=spec.prior,
        log_transform=spec.log_transform,
        candidates=candidates,
        fit=diagnostics,
        per_candidate=results,
        decision=decision,
        notices=notices,
    )


def scan_trials(
    data: ArrayLike,
    max_candidates: int,
    null_source: NullSource,
    *,
    sides: Sequence[Side] = ("max",),
    spec: TrialSpec | None = None,
    labels: Sequence[str] | None = None,
    selection: Literal["largest", "smallest"] = "largest",
    fit_floor: float = 0.01,
    gof_test: GofTest = "lilliefors",
    strict_fit: bool = False,
    seed: int | None = None,
) -> ScanResult:
    """Run trials for ``n' = 1..max_candidates`` on each side and pick a set.

    Errors raised by a trial are recorded in ``errors`` and the scan goes
    on, except ``FitRejected`` under ``strict_fit``. On each side the
    selected candidate set is that of the largest (or, with
    ``selection="smallest"``, the smallest) ``n'`` whose trial rejects.

    Examples:
        >>> result = scan_trials(scores, 7, cache, spec=TrialSpec(log_transform=True))  # doctest: +SKIP
        >>> result.selected_n_prime  # doctest: +SKIP
        {'max': 6}
    """
    if max_candidates < 1:
        raise InvalidParameter(
            f"max_candidates must be >= 1, got {max_candidates}",
            max_candidates=max_candidates,
        )
    base = spec or TrialSpec()
    result = ScanResult(seed=seed, selection=selection)
    for side in sides:
        rejecting: list[TrialReport] = []
        for k in range(1, max_candidates + 1):
            trial = base.model_copy(update={"side": side, "n_prime": k})
            try:
                report = run_trial(
                    data,
                    trial,
                    null_source,
                    labels=labels,
                    fit_floor=fit_floor,
                    gof_test=gof_test,
                    strict_fit=strict_fit,
                )
            except HStarError as e:
                if strict_fit and isinstance(e, FitRejected):
                    raise
                logger.warning("Trial side=%s n'=%d failed: %s", side, k, e.message)
                result.errors.append(TrialError(side=side, n_prime=k, error=e.to_error()))
                continue
            result.reports.append(report)
            if report.decision == "Reject":
                rejecting.append(report)
        chosen = None
        if rejecting:
            chosen = rejecting[-1] if selection == "largest" else rejecting[0]
        result.selected_n_prime[side] = chosen.n_prime if chosen else None
        result.selected[side] = list(chosen.candidates) if chosen else []
    return result


def _fmt(value: float) -> str:
    return "inf" if np.isinf(value) else f"{value:.4f}"


def _report_lines(report: TrialReport) -> list[str]:
    fitted = report.fit.fitted
    scale = "log scale" if report.log_transform else "input scale"
    n_prime = (
        f"{report.n_prime} (requested {report.requested_n_prime})"
        if report.n_prime != report.requested_n_prime
        else str(report.n_prime)
    )
    lines = [
        f"h* test  side={report.side}  n={report.n}  n'={n_prime}  alpha={report.alpha:g}",
        f"prior: {report.prior} ({scale})  mu={fitted.mu:.4f}  sigma={fitted.sigma:.4f}  "
        f"fitted to {report.n - report.n_prime} ordinary values",
        f"fit: {report.fit.gof_test} statistic={report.fit.gof_statistic:.4f}  "
        f"p={report.fit.gof_p_value:.4f}",
        "candidates:",
    ]
    for cand, res in zip(report.candidates, report.per_candidate, strict=True):
        name = cand.label if cand.label is not None else f"#{cand.index}"
        lines.append(
            f"  {name}  value={cand.value:g}  h*={_fmt(res.h_star)}  p={res.p_value:.4f}"
        )
    decision = {"Reject": "Reject", "DoNotReject": "Do not reject", None: "withheld"}
    lines.append(f"decision: {decision[report.decision]}")
    lines.extend(f"notice: {notice}" for notice in report.notices)
    return lines


def render_report(report: TrialReport, fmt: ReportFormat = "text") -> bytes:
    """Render a trial report as text or versioned JSON (UTF-8 bytes)."""
    if fmt == "json":
        return report.model_dump_json(indent=2).encode("utf-8")
    return ("\n".join(_report_lines(report)) + "\n").encode("utf-8")


def render_scan(scan: ScanResult, fmt: ReportFormat = "text") -> bytes:
    """Render every trial of a scan followed by the selection per side."""
    if fmt == "json":
        return scan.model_dump_json(indent=2).encode("utf-8")
    blocks = ["\n".join(_report_lines(r)) for r in scan.reports]
    blocks.extend(
        f"h* test  side={err.side}  n'={err.n_prime}\nerror: {err.error.code}: "
        f"{err.error.message}"
        for err in scan.errors
    )
    summary = []
    for side, n_prime in scan.selected_n_prime.items():
        if n_prime is None:
            summary.append(f"selected ({side}): none")
            continue
        names = ", ".join(
            c.label if c.label is not None else f"#{c.index}" for c in scan.selected[side]
        )
        summary.append(f"selected ({side}, {scan.selection} n'={n_prime}): {names}")
    if scan.seed is not None:
        summary.append(f"seed: {scan.seed}")
    blocks.append("\n".join(summary))
    return ("\n\n".join(blocks) + "\n").encode("utf-8")
