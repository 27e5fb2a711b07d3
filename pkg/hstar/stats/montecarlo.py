"""Simulated null distributions of h*, critical values, p-values and table files.

Trials are drawn in fixed-size blocks; block ``b`` always uses the stream
``derive(seed, "null", <prior key>, side, n, b)``. Blocks are grouped into
chunks that run on a thread pool, and merging chunk counts is a plain sum,
so the result depends only on ``(prior, n, trials, seed, side, binning)``
and never on the thread count.

Values are histogrammed in bins of ``bin_width`` starting at 1/sqrt(2), the
lower bound of h*. Values at or above ``cap`` are kept exactly in a sorted
spill array so deep-tail quantiles remain available.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
import logging
import math
import os
from pathlib import Path
import re
import time
from typing import TYPE_CHECKING

import numpy as np
import pandas as pd

from hstar.errors import (
    InsufficientTailMass,
    InvalidParameter,
    MalformedTableFile,
    TooFewObservations,
)
from hstar.models import (
    TABLE_ALPHAS,
    CriticalValueTable,
    DistributionSpec,
    NullDistribution,
    Side,
    TableRow,
)
from hstar.stats.distributions import check_spec, sample
from hstar.stats.statistic import SUPPORT_MINIMUM, h_star_batch
from hstar.utils.rng import derive

if TYPE_CHECKING:
    from collections.abc import Iterable, Sequence

    from numpy.typing import NDArray

logger = logging.getLogger(__name__)

BIN_ORIGIN = SUPPORT_MINIMUM
DEFAULT_BIN_WIDTH = 0.0025
DEFAULT_NORMAL_CAP = 200.0
DEFAULT_LOGNORMAL_CAP = 1e4
MIN_TRIALS = 10_000
TABLE_COLUMNS = ["n", "nu", "alpha", "h_crit"]
NULL_COLUMNS = ["h_bin_left", "count"]

_BLOCK_ELEMENTS = 1 << 20
_MAX_BLOCK_TRIALS = 4096
_MIN_BLOCK_TRIALS = 64
# tolerance when an observation sits on a bin edge
_EDGE_TOLERANCE = 1e-9
_HEADER_PAIR = re.compile(r"(\w+)=([^,\s]+)")


def block_trials(n: int) -> int:
    """Trials per block for sample size ``n`` (depends on ``n`` only)."""
    return int(min(_MAX_BLOCK_TRIALS, max(_MIN_BLOCK_TRIALS, _BLOCK_ELEMENTS // n)))


def default_cap(prior: DistributionSpec) -> float:
    """Spill threshold for a prior family."""
    return DEFAULT_LOGNORMAL_CAP if prior.kind == "lognormal" else DEFAULT_NORMAL_CAP


def _binning(cap: float, bin_width: float) -> tuple[int, float]:
    n_bins = int(math.ceil((cap - BIN_ORIGIN) / bin_width))
    return n_bins, BIN_ORIGIN + n_bins * bin_width


def _block_sizes(n: int, trials: int) -> list[int]:
    size = block_trials(n)
    full, rest = divmod(trials, size)
    return [size] * full + ([rest] if rest else [])


def simulate_blocks(
    prior: DistributionSpec,
    n: int,
    trials: int,
    seed: int,
    blocks: Sequence[int],
    *,
    side: Side = "max",
    bin_width: float = DEFAULT_BIN_WIDTH,
    cap: float | None = None,
) -> NullDistribution:
    """Simulate a subset of the blocks of a ``trials``-trial null distribution.

    The returned partial distribution has ``total`` equal to the trials in
    ``blocks``; :func:`merge` combines partials.
    """
    standardized = prior.standardized()
    key = standardized.cache_key()
    sizes = _block_sizes(n, trials)
    n_bins, cap_edge = _binning(cap or default_cap(prior), bin_width)
    counts = np.zeros(n_bins, dtype=np.int64)
    spill: list[NDArray[np.float64]] = []
    total = 0
    for b in blocks:
        rng = derive(seed, "null", key, side, n, b)
        draws = sample(standardized, (sizes[b], n), rng)
        if side == "min":
            draws = -draws
        h = h_star_batch(draws)
        regular = h < cap_edge
        idx = np.floor((h[regular] - BIN_ORIGIN) / bin_width).astype(np.int64)
        counts += np.bincount(np.clip(idx, 0, n_bins - 1), minlength=n_bins)
        spill.append(h[~regular])
        total += sizes[b]
    return NullDistribution(
        prior=standardized,
        n=n,
        nu=n - 2,
        side=side,
        bin_width=bin_width,
        cap=cap_edge,
        counts=counts,
        spill=np.sort(np.concatenate(spill)) if spill else np.empty(0),
        total=total,
        seed=seed,
    )


def merge(parts: Iterable[NullDistribution]) -> NullDistribution:
    """Sum the counts of partial distributions built on the same binning."""
    parts = list(parts)
    if not parts:
        raise InvalidParameter("Nothing to merge")
    first = parts[0]
    for p in parts[1:]:
        if (p.n, p.side, p.bin_width, p.cap) != (
            first.n,
            first.side,
            first.bin_width,
            first.cap,
        ) or p.prior != first.prior:
            raise InvalidParameter("Cannot merge null distributions with different layouts")
    return first.model_copy(
        update={
            "counts": np.sum([p.counts for p in parts], axis=0),
            "spill": np.sort(np.concatenate([p.spill for p in parts])),
            "total": sum(p.total for p in parts),
        }
    )


def simulate_null(
    prior: DistributionSpec,
    n: int,
    trials: int,
    seed: int,
    *,
    side: Side = "max",
    bin_width: float = DEFAULT_BIN_WIDTH,
    cap: float | None = None,
    threads: int | None = None,
) -> NullDistribution:
    """Simulate the null distribution of h* for ``n`` draws from ``prior``.

    Args:
        prior: Law of the data under the null; only its standardized form
            matters.
        n: Sample size (>= 4).
        trials: Number of simulated samples (>= 10^4).
        seed: Root seed.
        side: ``min`` negates each draw before computing h*.
        bin_width: Histogram bin width.
        cap: Spill threshold; defaults per prior family.
        threads: Worker threads; ``None`` uses the CPU count.

    Returns:
        The binned distribution.

    Raises:
        TooFewObservations: ``n < 4``.
        InvalidParameter: ``trials < 10^4`` or a non-positive bin width.
    """
    check_spec(prior)
    if n < 4:
        raise TooFewObservations(f"Null distributions need n >= 4, got {n}", n=n)
    if trials < MIN_TRIALS:
        raise InvalidParameter(
            f"At least {MIN_TRIALS} trials are required, got {trials}", trials=trials
        )
    if bin_width <= 0.0:
        raise InvalidParameter(f"bin_width must be positive, got {bin_width}")
    if prior.standardized().symmetric:
        # the min side of a symmetric law is the max side
        side = "max"

    n_blocks = len(_block_sizes(n, trials))
    workers = max(1, min(threads or os.cpu_count() or 1, n_blocks))
    chunks = [c.tolist() for c in np.array_split(np.arange(n_blocks), workers)]
    logger.info(
        "Simulating h* null: prior=%s n=%d side=%s trials=%d seed=%d threads=%d",
        prior.standardized().cache_key(),
        n,
        side,
        trials,
        seed,
        workers,
    )
    started = time.perf_counter()
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(
            pool.map(
                lambda blocks: simulate_blocks(
                    prior,
                    n,
                    trials,
                    seed,
                    blocks,
                    side=side,
                    bin_width=bin_width,
                    cap=cap,
                ),
                chunks,
            )
        )
    null = merge(parts)
    logger.info(
        "Simulated n=%d in %.2fs (%d values spilled)",
        n,
        time.perf_counter() - started,
        null.spill.size,
    )
    return null


def _tail_counts(null: NullDistribution) -> NDArray[np.int64]:
    # tail[i] = number of values in bins i.. plus the spill
    tail = np.cumsum(null.counts[::-1])[::-1] + null.spill.size
    return np.append(tail, null.spill.size)


def critical_value(null: NullDistribution, alpha: float) -> float:
    """Smallest bin right edge ``h`` with empirical ``P(h* > h) <= alpha``.

    Raises:
        InvalidParameter: ``alpha`` outside (0, 1).
        InsufficientTailMass: ``total < 100 / alpha``.

    Examples:
        >>> critical_value(simulate_null(DistributionSpec(), 10, 10**6, 1), 0.05)  # doctest: +SKIP
        2.58...
    """
    if not 0.0 < alpha < 1.0:
        raise InvalidParameter(f"alpha must lie in (0, 1), got {alpha}", alpha=alpha)
    if null.total < 100.0 / alpha:
        raise InsufficientTailMass(
            f"{null.total} trials cannot resolve alpha={alpha}; need {math.ceil(100 / alpha)}",
            total=null.total,
            alpha=alpha,
        )
    allowed = alpha * null.total
    above_right_edge = _tail_counts(null)[1:]
    hits = np.flatnonzero(above_right_edge[:-1] <= allowed)
    if hits.size:
        return BIN_ORIGIN + (int(hits[0]) + 1) * null.bin_width
    # quantile lies in the spill
    k = null.spill.size
    keep_above = int(math.floor(allowed))
    return float(null.spill[max(k - keep_above - 1, 0)])


def p_value(null: NullDistribution, h_obs: float) -> float:
    """Empirical ``P(h* >= h_obs)``, counting the whole bin that holds ``h_obs``.

    ``+inf`` gives 0, values at or below the support minimum give 1, and any
    other finite observation gets at least ``1 / total``.
    """
    if math.isnan(h_obs):
        raise InvalidParameter("h_obs is NaN")
    if math.isinf(h_obs):
        return 0.0
    if h_obs <= BIN_ORIGIN:
        return 1.0
    if h_obs < null.cap:
        i = int(math.floor((h_obs - BIN_ORIGIN) / null.bin_width + _EDGE_TOLERANCE))
        count = int(_tail_counts(null)[min(i, null.n_bins)])
    else:
        count = int(null.spill.size - np.searchsorted(null.spill, h_obs, side="left"))
    return float(min(1.0, max(count / null.total, 1.0 / null.total)))


# --------------------------------------------------------------------------
# Critical-value tables
# --------------------------------------------------------------------------


def critical_value_table(
    nulls: Iterable[NullDistribution], alphas: Sequence[float] = TABLE_ALPHAS
) -> CriticalValueTable:
    """Tabulate critical values (rounded to 4 decimals) of several nulls.

    All nulls must share prior and bin width. Rows loaded from a cache may
    hold more trials or come from another seed; the header then records the
    smallest trial count and the seed of the first row.
    """
    nulls = sorted(nulls, key=lambda d: d.n)
    if not nulls:
        raise InvalidParameter("No null distributions to tabulate")
    first = nulls[0]
    rows = []
    for null in nulls:
        if (null.prior, null.bin_width) != (first.prior, first.bin_width):
            raise InvalidParameter("Table rows must share prior and bin width")
        if (null.total, null.seed) != (first.total, first.seed):
            logger.warning(
                "Row n=%d has %d trials from seed %d; first row has %d from seed %d",
                null.n,
                null.total,
                null.seed,
                first.total,
                first.seed,
            )
        crit = {float(a): round(critical_value(null, a), 4) for a in alphas}
        rows.append(TableRow(n=null.n, nu=null.nu, critical=crit))
    return CriticalValueTable(
        prior=first.prior,
        sims=min(null.total for null in nulls),
        seed=first.seed,
        bin_width=first.bin_width,
        alphas=[float(a) for a in alphas],
        rows=rows,
    )


def _prior_header(prior: DistributionSpec) -> str:
    if prior.kind == "lognormal":
        return f"prior=lognormal, shape={prior.sigma:g}"
    if prior.kind == "truncated_normal":
        return f"prior=truncated_normal, shape={prior.lower:g}"
    return "prior=normal"


def _parse_header(line: str, path: Path, required: Sequence[str]) -> dict[str, str]:
    if not line.startswith("#"):
        raise MalformedTableFile(f"{path}: missing '# prior=...' header", path=str(path))
    fields = dict(_HEADER_PAIR.findall(line))
    missing = [k for k in required if k not in fields]
    if missing:
        raise MalformedTableFile(
            f"{path}: header lacks {', '.join(missing)}", path=str(path), missing=missing
        )
    return fields


def _prior_from_header(fields: dict[str, str], path: Path) -> DistributionSpec:
    kind = fields["prior"]
    try:
        if kind == "normal":
            return DistributionSpec(kind="normal")
        if kind == "lognormal":
            return DistributionSpec(kind="lognormal", sigma=float(fields.get("shape", 1)))
        if kind == "truncated_normal":
            return DistributionSpec(
                kind="truncated_normal", lower=float(fields.get("shape", 0))
            )
    except ValueError as e:
        raise MalformedTableFile(f"{path}: bad shape in header", path=str(path)) from e
    raise MalformedTableFile(f"{path}: unknown prior '{kind}'", path=str(path))


def table_to_csv(table: CriticalValueTable) -> str:
    """Format a table as ``n,nu,alpha,h_crit`` rows under a ``# prior=...`` header."""
    records = [
        (row.n, row.nu, format(alpha, "g"), f"{row.critical[alpha]:.4f}")
        for row in table.rows
        for alpha in table.alphas
    ]
    frame = pd.DataFrame.from_records(records, columns=TABLE_COLUMNS)
    header = (
        f"# {_prior_header(table.prior)}, sims={table.sims}, "
        f"seed={table.seed}, bin={table.bin_width:g}\n"
    )
    return header + frame.to_csv(index=False, lineterminator="\n")


def save_table(path: str | Path, table: CriticalValueTable) -> None:
    """Write :func:`table_to_csv` output to ``path``."""
    path = Path(path)
    path.write_text(table_to_csv(table), encoding="utf-8")
    logger.info("Wrote %d table rows to %s", len(table.rows), path)


def load_table(path: str | Path) -> CriticalValueTable:
    """Read a table written by :func:`save_table`.

    Raises:
        MalformedTableFile: Header or columns differ from the schema, a cell
            is missing or non-numeric, ``nu != n - 2``, rows disagree on the
            set of alphas, or a critical value falls as alpha decreases.
    """
    path = Path(path)
    try:
        with path.open(encoding="utf-8") as fh:
            header = fh.readline()
        fields = _parse_header(header, path, ("prior", "sims", "seed", "bin"))
        frame = pd.read_csv(path, comment="#")
    except (OSError, UnicodeDecodeError, pd.errors.ParserError) as e:
        raise MalformedTableFile(f"{path}: {e}", path=str(path)) from e
    except pd.errors.EmptyDataError as e:
        raise MalformedTableFile(f"{path}: no data rows", path=str(path)) from e

    if list(frame.columns) != TABLE_COLUMNS:
        raise MalformedTableFile(
            f"{path}: expected columns {TABLE_COLUMNS}, found {list(frame.columns)}",
            path=str(path),
        )
    numeric = frame.apply(pd.to_numeric, errors="coerce")
    if frame.empty or numeric.isna().any().any():
        raise MalformedTableFile(f"{path}: empty, missing or non-numeric cells", path=str(path))
    if not ((numeric["n"] % 1 == 0) & (numeric["nu"] == numeric["n"] - 2)).all():
        raise MalformedTableFile(f"{path}: nu must equal n - 2", path=str(path))

    rows: list[TableRow] = []
    alphas: list[float] | None = None
    for n, group in numeric.groupby("n", sort=True):
        ordered = group.sort_values("alpha", ascending=False)
        row_alphas = ordered["alpha"].astype(float).tolist()
        if alphas is None:
            alphas = row_alphas
        elif row_alphas != alphas:
            raise MalformedTableFile(
                f"{path}: row n={int(n)} has a different set of alphas", path=str(path)
            )
        crit = ordered["h_crit"].astype(float).to_numpy()
        if np.any(np.diff(crit) < 0):
            raise MalformedTableFile(
                f"{path}: row n={int(n)} is not monotone in alpha", path=str(path), n=int(n)
            )
        rows.append(
            TableRow(
                n=int(n),
                nu=int(n) - 2,
                critical=dict(zip(row_alphas, crit.tolist(), strict=True)),
            )
        )
    try:
        return CriticalValueTable(
            prior=_prior_from_header(fields, path),
            sims=int(fields["sims"]),
            seed=int(fields["seed"]),
            bin_width=float(fields["bin"]),
            alphas=alphas or [],
            rows=rows,
        )
    except ValueError as e:
        raise MalformedTableFile(f"{path}: bad header value: {e}", path=str(path)) from e


# --------------------------------------------------------------------------
# Null-distribution files
# --------------------------------------------------------------------------


def save_null(path: str | Path, null: NullDistribution) -> None:
    """Write non-empty bins as ``h_bin_left,count`` rows; spilled values follow.

    Spilled values are written as their exact value with a multiplicity.
    """
    path = Path(path)
    nonzero = np.flatnonzero(null.counts)
    lefts = BIN_ORIGIN + nonzero * null.bin_width
    spill_values, spill_counts = np.unique(null.spill, return_counts=True)
    frame = pd.DataFrame(
        {
            "h_bin_left": np.concatenate([lefts, spill_values]),
            "count": np.concatenate([null.counts[nonzero], spill_counts]).astype(np.int64),
        }
    )
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with tmp.open("w", encoding="utf-8", newline="") as fh:
        fh.write(
            f"# {_prior_header(null.prior)}, sims={null.total}, seed={null.seed}, "
            f"bin={null.bin_width!r}, n={null.n}, side={null.side}, cap={null.cap!r}\n"
        )
        frame.to_csv(fh, index=False, float_format="%.17g", lineterminator="\n")
    tmp.replace(path)


def load_null(path: str | Path) -> NullDistribution:
    """Read a file written by :func:`save_null`.

    Raises:
        MalformedTableFile: The header or rows do not match the schema, or the
            counts do not add up to ``sims``.
    """
    path = Path(path)
    try:
        with path.open(encoding="utf-8") as fh:
            header = fh.readline()
        fields = _parse_header(
            header, path, ("prior", "sims", "seed", "bin", "n", "side", "cap")
        )
        frame = pd.read_csv(path, comment="#")
        bin_width = float(fields["bin"])
        cap = float(fields["cap"])
        total = int(fields["sims"])
        n = int(fields["n"])
        side = fields["side"]
        seed = int(fields["seed"])
    except (OSError, UnicodeDecodeError, ValueError, pd.errors.ParserError) as e:
        raise MalformedTableFile(f"{path}: {e}", path=str(path)) from e
    if list(frame.columns) != NULL_COLUMNS or frame.isna().any().any():
        raise MalformedTableFile(f"{path}: expected columns {NULL_COLUMNS}", path=str(path))
    if side not in ("max", "min"):
        raise MalformedTableFile(f"{path}: bad side '{side}'", path=str(path))

    n_bins = int(round((cap - BIN_ORIGIN) / bin_width))
    lefts = frame["h_bin_left"].to_numpy(dtype=float)
    multiplicity = frame["count"].to_numpy(dtype=np.int64)
    regular = lefts < cap - bin_width / 2
    idx = np.rint((lefts[regular] - BIN_ORIGIN) / bin_width).astype(np.int64)
    if idx.size and (idx.min() < 0 or idx.max() >= n_bins):
        raise MalformedTableFile(f"{path}: bin outside the histogram", path=str(path))
    counts = np.zeros(n_bins, dtype=np.int64)
    np.add.at(counts, idx, multiplicity[regular])
    spill = np.sort(np.repeat(lefts[~regular], multiplicity[~regular]))
    if int(counts.sum()) + spill.size != total:
        raise MalformedTableFile(
            f"{path}: counts add up to {int(counts.sum()) + spill.size}, header says {total}",
            path=str(path),
        )
    return NullDistribution(
        prior=_prior_from_header(fields, path),
        n=n,
        nu=n - 2,
        side=side,  # type: ignore[arg-type]
        bin_width=bin_width,
        cap=cap,
        counts=counts,
        spill=spill,
        total=total,
        seed=seed,
    )
