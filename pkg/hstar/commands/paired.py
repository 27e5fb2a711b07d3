"""``hstar paired``: before/after comparison of the pretest outliers."""

from __future__ import annotations

import argparse
from typing import TYPE_CHECKING

from hstar.commands.common import open_cache, render_model, write_output
from hstar.stats.iut import render_scan
from hstar.stats.paired import paired_pipeline
from hstar.utils.ingest import ingest_paired

if TYPE_CHECKING:
    from hstar.config import Settings
    from hstar.models import PairedReport, RunConfig, WilcoxonResult


def register(
    subparsers: argparse._SubParsersAction, parents: list[argparse.ArgumentParser]
) -> None:
    """Add the ``paired`` subcommand."""
    parser = subparsers.add_parser(
        "paired",
        parents=parents,
        help="paired pre/post test on the pretest outliers",
        description="Scan the pretest, then compare the outliers' h* before and after.",
    )
    parser.add_argument("input", help="CSV file with columns id,pre,post")
    parser.add_argument(
        "--log",
        action=argparse.BooleanOptionalAction,
        default=True,
        help="analyse natural logs of the scores",
    )
    parser.add_argument("--max-candidates", type=int, default=7)


def _wilcoxon_line(result: WilcoxonResult) -> str:
    z = "" if result.z is None else f"  z={result.z:.4f}"
    return (
        f"signed-rank ({result.mode}): n={result.n}  W+={result.w_plus:g}  "
        f"W-={result.w_minus:g}{z}  p={result.p_two_sided:.4f}  "
        f"p(pre>post)={result.p_greater:.4f}"
    )


def _text(report: PairedReport, seed: int) -> bytes:
    study = report.study
    lines = [
        "== pretest",
        render_scan(report.pre_scan).decode("utf-8").rstrip(),
        "== posttest",
        render_scan(report.post_scan).decode("utf-8").rstrip(),
        "== paired h*",
        f"outliers: {', '.join(study.outlier_ids)}",
    ]
    lines.extend(
        f"  {i}  h*_pre={study.h_pre[i]:.4f}  h*_post={study.h_post[i]:.4f}"
        for i in study.outlier_ids
    )
    for result in (report.wilcoxon, report.wilcoxon_exact):
        if result is not None:
            lines.append(_wilcoxon_line(result))
    if report.significant is not None:
        verdict = "significant" if report.significant else "not significant"
        lines.append(f"verdict: {verdict} at alpha={report.alpha:g}")
    if report.post_critical_value is not None:
        lines.append(f"posttest critical h*: {report.post_critical_value:.4f}")
    lines.extend(f"note: {note}" for note in report.notes)
    lines.append(f"seed: {seed}")
    return ("\n".join(lines) + "\n").encode("utf-8")


def run(args: argparse.Namespace, config: RunConfig, settings: Settings) -> int:
    """Run the paired pipeline and write the report."""
    study = ingest_paired(config.inputs[0], log_transform=args.log)
    with open_cache(config, settings) as cache:
        report = paired_pipeline(
            study,
            cache,
            alpha=config.alpha,
            max_candidates=config.max_candidates,
            fit_floor=settings.fit_floor,
            gof_test=settings.gof_test,
            seed=config.seed,
        )
    payload = render_model(report) if config.output_format == "json" else _text(report, config.seed)
    write_output(payload, config.out)
    return 0
