"""Command-line entry point.

This module builds the ``hstar`` argument parser, configures logging,
resolves settings and dispatches to the subcommand modules. Exit status:
0 on success, 1 on usage errors, 2 on data or validation errors and 3 when
the statistical procedure cannot produce a result.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import TYPE_CHECKING, NoReturn

from pydantic import ValidationError

from hstar import __version__
from hstar.commands import accumulate, bayes, paired, power, table, test, unique
from hstar.commands.common import count, probability
from hstar.config import Settings, get_settings
from hstar.errors import HStarError, InvalidParameter
from hstar.models import RunConfig
from hstar.utils.rng import fresh_seed

if TYPE_CHECKING:
    from collections.abc import Sequence

logger = logging.getLogger(__name__)

COMMANDS = {
    "test": test,
    "table": table,
    "power": power,
    "accumulate": accumulate,
    "bayes": bayes,
    "paired": paired,
    "unique": unique,
}

EXIT_OK = 0
EXIT_USAGE = 1

_LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


class ArgumentParser(argparse.ArgumentParser):
    """Argument parser that exits with status 1 on usage errors."""

    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common_options() -> argparse.ArgumentParser:
    common = ArgumentParser(add_help=False)
    group = common.add_argument_group("common options")
    group.add_argument("--alpha", type=probability, default=None, help="significance level")
    group.add_argument(
        "--trials", type=count, default=None, help="trials per null distribution (e.g. 1e6)"
    )
    group.add_argument("--seed", type=int, default=None, help="root seed (printed if omitted)")
    group.add_argument(
        "--format", choices=["text", "json"], default="text", dest="output_format"
    )
    group.add_argument("--out", default=None, help="write results here instead of stdout")
    group.add_argument("--cache-dir", default=None, help="null-distribution cache directory")
    group.add_argument(
        "--no-cache", action="store_true", help="neither read nor write the disk cache"
    )
    group.add_argument("--threads", type=int, default=None, help="simulation threads")
    group.add_argument("-v", "--verbose", action="count", default=0)
    group.add_argument("-q", "--quiet", action="store_true")
    return common


def build_parser() -> ArgumentParser:
    """Build the ``hstar`` parser with one subparser per subcommand."""
    parser = ArgumentParser(
        prog="hstar",
        description="Outlier identification with the h* statistic.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="subcommand", required=True, metavar="COMMAND")
    parents = [_common_options()]
    for module in COMMANDS.values():
        module.register(subparsers, parents)
    return parser


def _configure_logging(settings: Settings, verbose: int, quiet: bool) -> None:
    level = getattr(logging, settings.log_level.upper())
    if quiet:
        level = logging.ERROR
    elif verbose:
        level = min(level, logging.DEBUG if verbose > 1 else logging.INFO)
    logging.basicConfig(level=level, format=_LOG_FORMAT, stream=sys.stderr, force=True)


def _resolve_settings(args: argparse.Namespace) -> Settings:
    settings = get_settings()
    update: dict[str, object] = {}
    if args.cache_dir:
        update["cache_dir"] = Path(args.cache_dir).expanduser()
    if args.no_cache:
        update["use_cache"] = False
    if args.threads:
        update["threads"] = args.threads
    return settings.model_copy(update=update) if update else settings


def _run_config(args: argparse.Namespace, settings: Settings, seed: int) -> RunConfig:
    return RunConfig(
        subcommand=args.subcommand,
        inputs=[args.input] if getattr(args, "input", None) else [],
        column=getattr(args, "column", None),
        side=getattr(args, "side", "max"),
        max_candidates=getattr(args, "max_candidates", 1),
        prior=getattr(args, "prior", "normal"),
        alpha=args.alpha if args.alpha is not None else settings.alpha,
        trials=args.trials or settings.trials,
        seed=seed,
        output_format=args.output_format,
        out=args.out,
        cache_dir=str(settings.cache_dir),
        threads=settings.threads,
    )


def _report_error(error: HStarError, output_format: str) -> int:
    if output_format == "json":
        sys.stderr.write(error.to_response().model_dump_json(indent=2) + "\n")
    else:
        sys.stderr.write(f"error: {error.code}: {error.message}\n")
    return error.exit_code


def main(argv: Sequence[str] | None = None) -> int:
    """Run the command line and return the exit status.

    Args:
        argv: Arguments without the program name (defaults to ``sys.argv``).

    Returns:
        0 on success, 1 on usage errors, 2 on data errors, 3 on procedure
        errors.

    Examples:
        >>> main(["unique", "--f", "1", "--n0", "10", "--samples", "100:1"])  # doctest: +SKIP
        0
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    settings = _resolve_settings(args)
    _configure_logging(settings, args.verbose, args.quiet)
    seed = args.seed if args.seed is not None else fresh_seed()
    sys.stderr.write(f"hstar: seed={seed}\n")

    try:
        config = _run_config(args, settings, seed)
    except ValidationError as e:
        parser.print_usage(sys.stderr)
        sys.stderr.write(f"hstar: error: {e.errors()[0]['loc'][0]}: {e.errors()[0]['msg']}\n")
        return EXIT_USAGE

    logger.info("Running %s (seed %d)", config.subcommand, seed)
    try:
        return COMMANDS[config.subcommand].run(args, config, settings)
    except HStarError as e:
        logger.debug("Command failed", exc_info=True)
        return _report_error(e, config.output_format)
    except ValidationError as e:
        first = e.errors()[0]
        return _report_error(
            InvalidParameter(
                f"{'.'.join(str(p) for p in first['loc'])}: {first['msg']}",
                errors=len(e.errors()),
            ),
            config.output_format,
        )
    except SystemExit as e:
        return int(e.code or 0)


if __name__ == "__main__":
    sys.exit(main())
