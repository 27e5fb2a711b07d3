"""``hstar accumulate``: h* of a fixed outlier as ordinary data accumulate."""

from __future__ import annotations

import argparse
import json
import logging
from typing import TYPE_CHECKING

from hstar.commands.common import count, int_ranges, open_cache, write_output
from hstar.errors import DegenerateDesign
from hstar.models import AccumulationSpec
from hstar.stats.power import accumulation_frame, accumulation_study, regress

if TYPE_CHECKING:
    from hstar.config import Settings
    from hstar.models import RegressionSummary, RunConfig

logger = logging.getLogger(__name__)

_TRANSFORMS = ("log10_n", "sqrt_n", "loglog")


def register(
    subparsers: argparse._SubParsersAction, parents: list[argparse.ArgumentParser]
) -> None:
    """Add the ``accumulate`` subcommand."""
    parser = subparsers.add_parser(
        "accumulate",
        parents=parents,
        help="run the sample-size accumulation study",
        description="Track mean h* of one fixed outlier while the sample grows.",
    )
    parser.add_argument("--effect", type=float, required=True)
    parser.add_argument(
        "--n", type=int_ranges, default=int_ranges("4..100,110..1000:10"), dest="n_values"
    )
    parser.add_argument("--study-trials", type=count, default=None)
    parser.add_argument(
        "--window-start", type=int, default=20, help="smallest n used by the regressions"
    )


def run(args: argparse.Namespace, config: RunConfig, settings: Settings) -> int:
    """Run the study, fit the regressions and write both."""
    spec = AccumulationSpec(
        effect_size=args.effect,
        n_schedule=args.n_values,
        trials=args.study_trials or settings.accumulation_trials,
        alpha=config.alpha,
        seed=config.seed,
    )
    with open_cache(config, settings) as cache:
        points = accumulation_study(spec, cache)
    regressions: list[RegressionSummary] = []
    for transform in _TRANSFORMS:
        try:
            regressions.append(regress(points, transform, n_min=args.window_start))
        except DegenerateDesign as e:
            logger.warning("Skipping %s regression: %s", transform, e.message)

    frame = accumulation_frame(points)
    if config.output_format == "json":
        document = {
            "seed": config.seed,
            "points": json.loads(frame.to_json(orient="records")),
            "regressions": [r.model_dump() for r in regressions],
        }
        payload = json.dumps(document, indent=2) + "\n"
    else:
        lines = [f"# seed={config.seed}, trials={spec.trials}"]
        lines.extend(
            f"# {r.x_transform}: slope={r.slope:.4f} intercept={r.intercept:.4f} "
            f"adj_r2={r.adjusted_r2:.4f} n={r.n_min}..{r.n_max}"
            for r in regressions
        )
        payload = "\n".join(lines) + "\n" + frame.to_csv(index=False, lineterminator="\n")
    write_output(payload.encode("utf-8"), config.out)
    return 0
