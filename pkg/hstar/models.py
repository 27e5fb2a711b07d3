"""Pydantic models for inputs, intermediate results and reports.

Every record the library hands back to callers, and every JSON document the
CLI prints, is one of these models. Error payloads keep the
``{"error": {"code", "message", "details"}}`` envelope.
"""

from __future__ import annotations

import math
from typing import Any, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

Side = Literal["max", "min"]
DistributionKind = Literal["normal", "lognormal", "truncated_normal"]
Decision = Literal["Reject", "DoNotReject"]
NoveltyVerdict = Literal["Holds", "Equal", "Violated"]
NoveltyOverall = Literal["Holds", "Equal", "Violated", "Untested"]
Quadrant = Literal[
    "recurring-exceptional",
    "unique-genius",
    "common-above-average",
    "rare-ordinary",
]

TRIAL_REPORT_VERSION = "hstar.trial-report/1"
TABLE_ALPHAS: tuple[float, ...] = (
    0.40,
    0.30,
    0.20,
    0.15,
    0.10,
    0.05,
    0.02,
    0.01,
    0.002,
    0.001,
)


class HStarModel(BaseModel):
    """Base model: infinite h* values serialize as ``Infinity`` in JSON."""

    model_config = ConfigDict(ser_json_inf_nan="constants")


class Error(BaseModel):
    """Error details structure.

    Used within ErrorResponse to provide detailed error information.

    Attributes:
        code: Machine-readable error code (e.g., "TOO_FEW_OBSERVATIONS").
        message: Human-readable error message describing what went wrong.
        details: Optional additional context or metadata about the error.

    Examples:
        >>> error = Error(
        ...     code="PARSE_ERROR",
        ...     message="Row 3, column 'score': 'n/a' is not a number",
        ...     details={"row": 3, "column": "score"}
        ... )
        >>> error.code
        'PARSE_ERROR'
    """

    code: str = Field(..., description="Machine-readable error code")
    message: str = Field(..., description="Human-readable error message")
    details: dict[str, Any] = Field(
        default_factory=dict, description="Additional error details (empty if none)"
    )


class ErrorResponse(BaseModel):
    """Standard error envelope printed by the CLI in JSON mode.

    Attributes:
        error: Nested Error object containing error details.

    Examples:
        >>> response = ErrorResponse(
        ...     error=Error(code="FIT_REJECTED", message="GoF p=0.0031 below 0.01")
        ... )
        >>> response.model_dump()["error"]["code"]
        'FIT_REJECTED'
    """

    error: Error = Field(..., description="Error details")


# --------------------------------------------------------------------------
# Statistic
# --------------------------------------------------------------------------


class Sample(HStarModel):
    """Observations with the side the candidate outlier is taken from.

    Attributes:
        values: Observations in the caller's measurement units.
        side: ``max`` takes the largest value as candidate; ``min`` analyses
            the negated values.

    Examples:
        >>> Sample(values=[3, 4, 5, 8]).side
        'max'
    """

    values: list[float] = Field(..., description="Observations")
    side: Side = Field(default="max", description="Extreme holding the candidate")


class HStarOutcome(HStarModel):
    """Value of h* for one sample, with its rescaled and difference-space forms.

    Attributes:
        h_star: The statistic; ``inf`` when every ordinary value is equal.
        h_tilde: ``sqrt(2 / (n - 2)) * h_star``.
        n: Sample size including the candidate.
        nu: Degrees of freedom, ``n - 2``.
        q_over_r_sq: Effective number of participating differences, in
            ``[1, n - 1]``.
        candidate_value: The candidate in the caller's units.
        degenerate: True when the ordinary values have zero spread.
    """

    h_star: float = Field(..., description="h* statistic")
    h_tilde: float = Field(..., description="Rescaled statistic")
    n: int = Field(..., ge=4, description="Sample size")
    nu: int = Field(..., ge=2, description="Degrees of freedom")
    q_over_r_sq: float = Field(..., description="Q^2/R^2 of the difference space")
    candidate_value: float = Field(..., description="Candidate outlier value")
    degenerate: bool = Field(default=False, description="Zero ordinary spread")


class WeightSpec(HStarModel):
    """Weights and sensitivity exponent for the generalized statistic.

    ``candidate_weights`` is either aligned with the sample values (length n;
    the candidate's own entry is ignored) or with the ordinary values in
    sample order (length n - 1). ``pair_weights`` is an n x n matrix read on
    its upper triangle when ``pair_rule`` is ``explicit``.

    Examples:
        >>> WeightSpec(candidate_weights=[2, 1, 1]).pair_rule
        'geometric_mean'
    """

    candidate_weights: list[float] | None = Field(
        default=None, description="Weights of the distances to the candidate"
    )
    pair_rule: Literal["geometric_mean", "explicit"] = Field(
        default="geometric_mean", description="How pairwise weights are formed"
    )
    pair_weights: list[list[float]] | None = Field(
        default=None, description="Explicit pairwise weight matrix"
    )
    eta: float = Field(default=2.0, description="Sensitivity exponent")


# --------------------------------------------------------------------------
# Distributions and null tables
# --------------------------------------------------------------------------


class DistributionSpec(HStarModel):
    """A prior law for ordinary data.

    Attributes:
        kind: ``normal``, ``lognormal`` (mu/sigma of the logs) or
            ``truncated_normal`` (normal restricted to values above ``lower``).
        mu: Location.
        sigma: Scale, strictly positive.
        lower: Truncation bound for ``truncated_normal``.

    Examples:
        >>> DistributionSpec(kind="normal", mu=7, sigma=3).standardized()
        DistributionSpec(kind='normal', mu=0.0, sigma=1.0, lower=None)
        >>> DistributionSpec(kind="lognormal", mu=2, sigma=0.5).cache_key()
        'lognormal-s0.5000'
    """

    kind: DistributionKind = Field(default="normal", description="Distribution family")
    mu: float = Field(default=0.0, description="Location")
    sigma: float = Field(default=1.0, description="Scale")
    lower: float | None = Field(default=None, description="Truncation bound")

    def standardized(self) -> DistributionSpec:
        """Return the affine-equivalent member h* cannot tell apart from this one.

        h* is invariant under ``a * X + b`` with ``a > 0``. For the lognormal
        family that absorbs ``exp(mu)`` only; the shape ``sigma`` remains.
        """
        if self.kind == "normal":
            return DistributionSpec(kind="normal")
        if self.kind == "lognormal":
            return DistributionSpec(kind="lognormal", sigma=round(self.sigma, 4))
        lower = 0.0 if self.lower is None else (self.lower - self.mu) / self.sigma
        return DistributionSpec(kind="truncated_normal", lower=round(lower, 4))

    def cache_key(self) -> str:
        """File-name-safe key of the standardized law."""
        std = self.standardized()
        if std.kind == "normal":
            return "normal"
        if std.kind == "lognormal":
            return f"lognormal-s{std.sigma:.4f}"
        return f"truncated_normal-a{std.lower:.4f}"

    @property
    def symmetric(self) -> bool:
        """True when reflecting the law leaves its standardized form unchanged."""
        return self.kind == "normal"


class FitDiagnostics(HStarModel):
    """Fitted prior with goodness-of-fit evidence.

    Attributes:
        fitted: Maximum-likelihood parameters.
        gof_test: Name of the test that produced ``gof_p_value``.
        gof_statistic: Test statistic (A^2 or the KS distance).
        gof_p_value: p-value in [0, 1].
        qq_points: (theoretical quantile, sample quantile) per ordinary value.
    """

    fitted: DistributionSpec
    gof_test: str
    gof_statistic: float
    gof_p_value: float = Field(..., ge=0.0, le=1.0)
    qq_points: list[tuple[float, float]]


class NullDistribution(HStarModel):
    """Binned simulated law of h* under a prior for one sample size.

    Bin ``i`` covers ``[bin_origin + i * bin_width, bin_origin + (i + 1) * bin_width)``.
    Values at or above ``cap`` are kept exactly, sorted, in ``spill``.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, ser_json_inf_nan="constants")

    prior: DistributionSpec
    n: int = Field(..., ge=4)
    nu: int = Field(..., ge=2)
    side: Side = "max"
    bin_width: float
    bin_origin: float = 1.0 / math.sqrt(2.0)
    cap: float
    counts: np.ndarray
    spill: np.ndarray
    total: int
    seed: int

    @property
    def n_bins(self) -> int:
        """Number of regular bins below the spill threshold."""
        return int(self.counts.shape[0])


class TableRow(HStarModel):
    """Critical values for one sample size, keyed by significance level."""

    n: int = Field(..., ge=4)
    nu: int = Field(..., ge=2)
    critical: dict[float, float] = Field(..., description="alpha -> critical h*")


class CriticalValueTable(HStarModel):
    """Critical values of h* for a prior over a grid of sample sizes."""

    prior: DistributionSpec
    sims: int = Field(..., description="Trials per row")
    seed: int
    bin_width: float
    alphas: list[float] = Field(default_factory=lambda: list(TABLE_ALPHAS))
    rows: list[TableRow] = Field(default_factory=list)


# --------------------------------------------------------------------------
# Intersection-union testing
# --------------------------------------------------------------------------


class TrialSpec(HStarModel):
    """Settings of one outlier-identification trial.

    Examples:
        >>> TrialSpec(n_prime=2, log_transform=True).alpha
        0.05
    """

    side: Side = "max"
    n_prime: int = Field(default=1, ge=1, description="Number of candidate extrema")
    prior: Literal["normal", "lognormal"] = Field(
        default="normal", description="Prior fitted to the ordinary data"
    )
    alpha: float = Field(default=0.05, gt=0.0, lt=1.0)
    log_transform: bool = Field(
        default=False, description="Analyse natural logs of the data"
    )


class Candidate(HStarModel):
    """One candidate outlier with its position in the input."""

    index: int = Field(..., description="Zero-based position in the input")
    label: str | None = Field(default=None, description="Caller-supplied id")
    value: float = Field(..., description="Value in input units")
    analysed_value: float = Field(..., description="Value after any log transform")


class CandidateResult(HStarModel):
    """h* and its p-value for ordinary data plus one candidate."""

    index: int
    label: str | None = None
    h_star: float
    p_value: float
    degenerate: bool = False


class TrialReport(HStarModel):
    """Outcome of one trial.

    ``decision`` is ``None`` when the prior fit was rejected and the decision
    is withheld.
    """

    version: str = TRIAL_REPORT_VERSION
    side: Side
    n: int
    requested_n_prime: int
    n_prime: int
    alpha: float
    prior: str
    log_transform: bool
    candidates: list[Candidate]
    fit: FitDiagnostics
    per_candidate: list[CandidateResult]
    decision: Decision | None
    notices: list[str] = Field(default_factory=list)


class TrialError(HStarModel):
    """A trial of a scan that raised instead of producing a report."""

    side: Side
    n_prime: int
    error: Error


class ScanResult(HStarModel):
    """All trials of a scan and the selected candidate set per side."""

    version: str = TRIAL_REPORT_VERSION
    seed: int | None = None
    selection: Literal["largest", "smallest"] = "largest"
    reports: list[TrialReport] = Field(default_factory=list)
    errors: list[TrialError] = Field(default_factory=list)
    selected_n_prime: dict[str, int | None] = Field(default_factory=dict)
    selected: dict[str, list[Candidate]] = Field(default_factory=dict)


# --------------------------------------------------------------------------
# Power and accumulation studies
# --------------------------------------------------------------------------


def _default_power_grid() -> list[int]:
    return [*range(4, 33), *range(42, 103, 10)]


class PowerStudySpec(HStarModel):
    """Grid of a power study."""

    effect_sizes: list[float] = Field(default_factory=lambda: [1.7, 3.7, 6.6])
    confidence_levels: list[float] = Field(default_factory=lambda: [0.90, 0.95, 0.99])
    n_values: list[int] = Field(default_factory=_default_power_grid)
    trials: int = Field(default=10_000, ge=100)
    seed: int = 0


class PowerPoint(HStarModel):
    effect: float
    cl: float
    n: int
    power: float


class AccumulationSpec(HStarModel):
    """Schedule of an accumulation study."""

    effect_size: float
    n_schedule: list[int]
    trials: int = Field(default=1_000, ge=10)
    alpha: float = Field(default=0.05, gt=0.0, lt=1.0)
    seed: int = 0


class AccumulationPoint(HStarModel):
    effect: float
    n: int
    mean_h: float
    sd_h: float
    mean_htilde: float
    power: float


class RegressionSummary(HStarModel):
    """Ordinary least squares fit of a study curve."""

    effect: float | None = None
    x_transform: Literal["log10_n", "sqrt_n", "loglog"]
    slope: float
    intercept: float
    r2: float
    adjusted_r2: float
    n_min: int
    n_max: int
    points: int


# --------------------------------------------------------------------------
# Bayesian posterior
# --------------------------------------------------------------------------


class BayesSpec(HStarModel):
    """Hyperparameters and quadrature of the contamination model."""

    tau: float = Field(default=5.0, gt=0.0, description="Scale of the mean shift")
    truncation: float = Field(
        default=4.0, gt=0.0, description="Shift grid spans (0, truncation * tau]"
    )
    delta_nodes: int = Field(default=64, ge=4)
    pi_nodes: int = Field(default=128, ge=8)
    trials: int = Field(default=100_000, ge=1_000)
    epsilon: float | None = Field(
        default=None, description="Per-bin smoothing mass; None uses 1/(10 trials)"
    )
    null_per_bin: int = Field(
        default=25, ge=5, description="Simulated null statistics per likelihood bin"
    )
    seed: int = 0


class LikelihoodTables(HStarModel):
    """Binned laws of h* without and with an outlier, for one sample size.

    Bins are cut at quantiles of the simulated null law, so each holds about
    the same number of null statistics; bin ``i`` is ``[edges[i - 1], edges[i])``
    with the first bin starting at 1/sqrt(2) and the last one open to infinity.
    Row ``i`` of ``outlier_mass`` is the law when one value is shifted by
    ``deltas[i]``. Every row, like ``null_mass``, sums to one after smoothing.

    ``likelihood_outlier`` is the shift-averaged outlier law after pooling
    adjacent bins until its ratio to ``null_mass`` never decreases; the
    posterior reads it against ``null_mass``.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, ser_json_inf_nan="constants")

    n: int = Field(..., ge=4)
    bin_origin: float = 1.0 / math.sqrt(2.0)
    edges: np.ndarray
    trials: int
    epsilon: float
    deltas: np.ndarray
    delta_weights: np.ndarray
    null_mass: np.ndarray
    outlier_mass: np.ndarray
    likelihood_outlier: np.ndarray
    pooled_bins: int = Field(..., description="Bins after pooling")


class PosteriorCandidate(HStarModel):
    index: int
    label: str | None = None
    h_obs: float
    likelihood_outlier: float
    likelihood_ordinary: float
    posterior: float


class PosteriorResult(HStarModel):
    """Per-candidate and combined posterior outlier probabilities."""

    n: int
    per_candidate: list[PosteriorCandidate]
    combined: float
    normalizer: float
    include_null_outcome: bool = False
    spec: BayesSpec


# --------------------------------------------------------------------------
# Paired study
# --------------------------------------------------------------------------


class WilcoxonResult(HStarModel):
    """Signed-rank test on paired differences (pre - post)."""

    mode: Literal["normal_approx_cc", "exact"]
    n: int = Field(..., description="Non-zero differences used")
    zeros_dropped: int = 0
    w_plus: float
    w_minus: float
    z: float | None = None
    p_two_sided: float
    p_greater: float = Field(..., description="One-sided p for pre > post")
    p_less: float = Field(..., description="One-sided p for pre < post")


class PairedStudy(HStarModel):
    """Aligned pre/post scores and the per-subject statistics."""

    ids: list[str]
    pre_scores: list[float]
    post_scores: list[float]
    log_transform: bool = True
    outlier_ids: list[str] = Field(default_factory=list)
    h_pre: dict[str, float] = Field(default_factory=dict)
    h_post: dict[str, float] = Field(default_factory=dict)


class PairedReport(HStarModel):
    """Outcome of the paired pipeline."""

    study: PairedStudy
    alpha: float
    pre_scan: ScanResult
    post_scan: ScanResult
    post_outliers: dict[str, list[str]] = Field(default_factory=dict)
    wilcoxon: WilcoxonResult | None = None
    wilcoxon_exact: WilcoxonResult | None = None
    significant: bool | None = None
    post_critical_value: float | None = None
    notes: list[str] = Field(default_factory=list)


# --------------------------------------------------------------------------
# Uniqueness
# --------------------------------------------------------------------------


class UniquenessIndex(HStarModel):
    """Occurrence counts for the I-index.

    ``cumulative_samples`` holds ``(n_cum, f_cum)`` pairs: total sample size
    and total occurrences after each additional draw.
    """

    f: int = Field(..., ge=1)
    n0: int = Field(..., ge=1)
    cumulative_samples: list[tuple[int, int]] = Field(default_factory=list)
    universe: int | None = Field(default=None, ge=1, description="Population size N")


class NoveltyCheckpoint(HStarModel):
    n_cum: int
    f_cum: int
    reference: float
    observed: float
    verdict: NoveltyVerdict


class NoveltyCheck(HStarModel):
    i_index: float
    checkpoints: list[NoveltyCheckpoint]
    overall: NoveltyOverall = Field(
        ..., description="Untested when there are no checkpoints"
    )


# --------------------------------------------------------------------------
# CLI
# --------------------------------------------------------------------------


class RunConfig(HStarModel):
    """Validated view of the command line shared by every subcommand."""

    subcommand: Literal["test", "table", "power", "accumulate", "bayes", "paired", "unique"]
    inputs: list[str] = Field(default_factory=list)
    column: str | None = None
    side: Literal["max", "min", "both"] = "max"
    max_candidates: int = Field(default=1, ge=1)
    prior: Literal["normal", "lognormal"] = "normal"
    alpha: float = Field(default=0.05, gt=0.0, lt=1.0)
    trials: int = Field(default=1_000_000, ge=10_000)
    seed: int = Field(..., ge=0)
    output_format: Literal["text", "json"] = "text"
    out: str | None = None
    cache_dir: str
    threads: int | None = Field(default=None, ge=1)
