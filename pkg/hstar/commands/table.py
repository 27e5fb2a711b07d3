"""``hstar table``: tabulate critical values of h*."""

from __future__ import annotations

import argparse
import logging
from typing import TYPE_CHECKING

from hstar.commands.common import floats, int_ranges, open_cache, render_model, write_output
from hstar.models import TABLE_ALPHAS, DistributionSpec
from hstar.stats.montecarlo import critical_value_table, table_to_csv

if TYPE_CHECKING:
    from hstar.config import Settings
    from hstar.models import RunConfig

logger = logging.getLogger(__name__)


def register(
    subparsers: argparse._SubParsersAction, parents: list[argparse.ArgumentParser]
) -> None:
    """Add the ``table`` subcommand."""
    parser = subparsers.add_parser(
        "table",
        parents=parents,
        help="simulate a critical-value table",
        description="Simulate null distributions and tabulate critical values of h*.",
    )
    parser.add_argument("--prior", choices=["normal", "lognormal"], default="normal")
    parser.add_argument(
        "--shape", type=float, default=1.0, help="log-scale sigma of a lognormal prior"
    )
    parser.add_argument("--n", type=int_ranges, default=int_ranges("4..32"), dest="n_values")
    parser.add_argument("--alphas", type=floats, default=list(TABLE_ALPHAS))


def run(args: argparse.Namespace, config: RunConfig, settings: Settings) -> int:
    """Simulate (or load) every row and write the table."""
    prior = DistributionSpec(kind=config.prior, sigma=args.shape)
    with open_cache(config, settings) as cache:
        nulls = [cache.get(prior, n) for n in args.n_values]
    table = critical_value_table(nulls, args.alphas)
    if config.output_format == "json":
        payload = render_model(table)
    else:
        payload = table_to_csv(table).encode("utf-8")
    write_output(payload, config.out)
    return 0
