"""``hstar bayes``: posterior outlier probabilities for the extreme values."""

from __future__ import annotations

import argparse
from typing import TYPE_CHECKING

from hstar.commands.common import count, render_model, write_output
from hstar.models import BayesSpec
from hstar.stats.bayes import analyse_candidates
from hstar.utils.ingest import ingest_csv, ingest_labels

if TYPE_CHECKING:
    from hstar.config import Settings
    from hstar.models import PosteriorResult, RunConfig


def register(
    subparsers: argparse._SubParsersAction, parents: list[argparse.ArgumentParser]
) -> None:
    """Add the ``bayes`` subcommand."""
    parser = subparsers.add_parser(
        "bayes",
        parents=parents,
        help="posterior probabilities that the extremes are outliers",
        description="Bayesian posterior outlier probabilities from simulated h* laws.",
    )
    parser.add_argument("input", help="CSV file with a header row")
    parser.add_argument("--column")
    parser.add_argument("--label-column")
    parser.add_argument("--side", choices=["max", "min"], default="max")
    parser.add_argument("--max-candidates", type=int, default=1, help="n' extremes")
    parser.add_argument("--log", action="store_true", help="analyse natural logs")
    parser.add_argument("--tau", type=float, default=5.0)
    parser.add_argument("--truncation", type=float, default=4.0)
    parser.add_argument("--study-trials", type=count, default=None)
    parser.add_argument(
        "--include-null-outcome",
        action="store_true",
        help="count the no-outlier outcome in the combined normalizer",
    )


def _text(result: PosteriorResult, seed: int) -> bytes:
    lines = [
        f"posterior  n={result.n}  tau={result.spec.tau:g}  trials={result.spec.trials}",
    ]
    for c in result.per_candidate:
        name = c.label if c.label is not None else f"#{c.index}"
        lines.append(
            f"  {name}  h*={c.h_obs:.4f}  P(h|outlier)={c.likelihood_outlier:.4g}  "
            f"P(h|ordinary)={c.likelihood_ordinary:.4g}  posterior={c.posterior:.4f}"
        )
    lines.append(f"combined: {result.combined:.4f}  (normalizer {result.normalizer:.4g})")
    lines.append(f"seed: {seed}")
    return ("\n".join(lines) + "\n").encode("utf-8")


def run(args: argparse.Namespace, config: RunConfig, settings: Settings) -> int:
    """Compute the posteriors and write them."""
    values = ingest_csv(config.inputs[0], config.column)
    labels = ingest_labels(config.inputs[0], args.label_column) if args.label_column else None
    spec = BayesSpec(
        tau=args.tau,
        truncation=args.truncation,
        trials=args.study_trials or settings.bayes_trials,
        seed=config.seed,
    )
    result = analyse_candidates(
        values,
        config.max_candidates,
        spec,
        side=args.side,
        log_transform=args.log,
        labels=labels,
        include_null_outcome=args.include_null_outcome,
    )
    payload = render_model(result) if config.output_format == "json" else _text(result, config.seed)
    write_output(payload, config.out)
    return 0
