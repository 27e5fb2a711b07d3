"""``hstar unique``: I-index, novelty check and quadrant."""

from __future__ import annotations

import argparse
from typing import TYPE_CHECKING

from hstar.commands.common import render_model, samples, write_output
from hstar.models import HStarModel, NoveltyCheck, Quadrant, UniquenessIndex
from hstar.stats.uniqueness import classify_quadrant, novelty_holds

if TYPE_CHECKING:
    from hstar.config import Settings
    from hstar.models import RunConfig


class UniquenessReport(HStarModel):
    """Output document of ``hstar unique``."""

    index: UniquenessIndex
    novelty: NoveltyCheck
    quadrant: Quadrant | None = None


def register(
    subparsers: argparse._SubParsersAction, parents: list[argparse.ArgumentParser]
) -> None:
    """Add the ``unique`` subcommand."""
    parser = subparsers.add_parser(
        "unique",
        parents=parents,
        help="I-index and novelty check",
        description="Compute I = f/n0 and check novelty along cumulative samples.",
    )
    parser.add_argument("--f", type=int, required=True, help="occurrences in the initial sample")
    parser.add_argument("--n0", type=int, required=True, help="initial sample size")
    parser.add_argument(
        "--samples", type=samples, default=[], help="cumulative n:f checkpoints"
    )
    parser.add_argument("--universe", type=int, default=None, help="population size N")
    parser.add_argument(
        "--h-significant",
        action=argparse.BooleanOptionalAction,
        default=None,
        help="whether the h* test rejected (enables the quadrant)",
    )
    parser.add_argument(
        "--i-threshold", type=float, default=None, help="I at or above which I is high"
    )
    parser.set_defaults(usage_error=parser.error)


def run(args: argparse.Namespace, config: RunConfig, settings: Settings) -> int:
    """Evaluate the index and write the report."""
    index = UniquenessIndex(
        f=args.f, n0=args.n0, cumulative_samples=args.samples, universe=args.universe
    )
    check = novelty_holds(index)
    quadrant = None
    if args.h_significant is not None:
        if args.i_threshold is None:
            args.usage_error("--h-significant needs --i-threshold")
        quadrant = classify_quadrant(args.h_significant, check.i_index, args.i_threshold)
    report = UniquenessReport(index=index, novelty=check, quadrant=quadrant)
    if config.output_format == "json":
        payload = render_model(report)
    else:
        lines = [f"I = {args.f}/{args.n0} = {check.i_index:.6g}"]
        lines.extend(
            f"  n={c.n_cum}  f={c.f_cum}  1/n0={c.reference:.6g}  f/n={c.observed:.6g}  "
            f"{c.verdict}"
            for c in check.checkpoints
        )
        lines.append(f"novelty: {check.overall}")
        if quadrant is not None:
            lines.append(f"quadrant: {quadrant}")
        payload = ("\n".join(lines) + "\n").encode("utf-8")
    write_output(payload, config.out)
    return 0
