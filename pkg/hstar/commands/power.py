"""``hstar power``: power curves over effect size, confidence level and n."""

from __future__ import annotations

import argparse
from typing import TYPE_CHECKING

from hstar.commands.common import count, floats, int_ranges, open_cache, write_output
from hstar.models import PowerStudySpec
from hstar.stats.power import power_curve, power_frame

if TYPE_CHECKING:
    from hstar.config import Settings
    from hstar.models import RunConfig


def register(
    subparsers: argparse._SubParsersAction, parents: list[argparse.ArgumentParser]
) -> None:
    """Add the ``power`` subcommand."""
    parser = subparsers.add_parser(
        "power",
        parents=parents,
        help="simulate power curves",
        description="Estimate the power of the h* test against one shifted value.",
    )
    parser.add_argument("--effects", type=floats, default=[1.7, 3.7, 6.6])
    parser.add_argument("--cls", type=floats, default=[0.90, 0.95, 0.99])
    parser.add_argument(
        "--n", type=int_ranges, default=int_ranges("4..32,42..102:10"), dest="n_values"
    )
    parser.add_argument(
        "--study-trials", type=count, default=None, help="samples per grid point"
    )


def run(args: argparse.Namespace, config: RunConfig, settings: Settings) -> int:
    """Estimate the curves and write them as CSV or JSON."""
    spec = PowerStudySpec(
        effect_sizes=args.effects,
        confidence_levels=args.cls,
        n_values=args.n_values,
        trials=args.study_trials or settings.power_trials,
        seed=config.seed,
    )
    with open_cache(config, settings) as cache:
        points = power_curve(spec, cache)
    frame = power_frame(points)
    if config.output_format == "json":
        payload = frame.to_json(orient="records", indent=2) + "\n"
    else:
        payload = f"# seed={config.seed}, trials={spec.trials}\n" + frame.to_csv(
            index=False, lineterminator="\n"
        )
    write_output(payload.encode("utf-8"), config.out)
    return 0
