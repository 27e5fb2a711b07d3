"""``hstar test``: scan a column for outliers on one or both sides."""

from __future__ import annotations

import argparse
import logging
from typing import TYPE_CHECKING

from hstar.commands.common import open_cache, render_model, write_output
from hstar.models import TrialSpec
from hstar.stats.iut import render_scan, scan_trials
from hstar.utils.ingest import ingest_csv, ingest_labels

if TYPE_CHECKING:
    from hstar.config import Settings
    from hstar.models import RunConfig

logger = logging.getLogger(__name__)


def register(
    subparsers: argparse._SubParsersAction, parents: list[argparse.ArgumentParser]
) -> None:
    """Add the ``test`` subcommand."""
    parser = subparsers.add_parser(
        "test",
        parents=parents,
        help="identify outliers with h* trials",
        description="Run h* trials for n' = 1..max-candidates and select a candidate set.",
    )
    parser.add_argument("input", help="CSV file with a header row")
    parser.add_argument("--column", help="column name or zero-based position")
    parser.add_argument("--label-column", help="column holding ids for the report")
    parser.add_argument("--side", choices=["max", "min", "both"], default="max")
    parser.add_argument("--max-candidates", type=int, default=1)
    parser.add_argument("--prior", choices=["normal", "lognormal"], default="normal")
    parser.add_argument("--log", action="store_true", help="analyse natural logs")
    parser.add_argument(
        "--selection",
        choices=["largest", "smallest"],
        default="largest",
        help="which rejecting n' to select",
    )
    parser.add_argument(
        "--strict-fit",
        action="store_true",
        help="abort (exit 3) when the prior fit is rejected",
    )


def run(args: argparse.Namespace, config: RunConfig, settings: Settings) -> int:
    """Run the scan and write the reports."""
    values = ingest_csv(config.inputs[0], config.column)
    labels = ingest_labels(config.inputs[0], args.label_column) if args.label_column else None
    sides = ("max", "min") if config.side == "both" else (config.side,)
    spec = TrialSpec(prior=config.prior, alpha=config.alpha, log_transform=args.log)
    with open_cache(config, settings) as cache:
        scan = scan_trials(
            values,
            config.max_candidates,
            cache,
            sides=sides,
            spec=spec,
            labels=labels,
            selection=args.selection,
            fit_floor=settings.fit_floor,
            gof_test=settings.gof_test,
            strict_fit=args.strict_fit,
            seed=config.seed,
        )
    if config.output_format == "json":
        payload = render_model(scan)
    else:
        payload = render_scan(scan, "text")
    write_output(payload, config.out)
    return 0
