"""Argument types and output helpers shared by the subcommands."""

from __future__ import annotations

import argparse
import logging
import math
from pathlib import Path
import sys
from typing import TYPE_CHECKING

from hstar.utils.table_cache import NullDistributionCache

if TYPE_CHECKING:
    from pydantic import BaseModel

    from hstar.config import Settings
    from hstar.models import RunConfig

logger = logging.getLogger(__name__)


def count(text: str) -> int:
    """Parse a positive count, accepting ``1e6`` and ``1_000_000``.

    Examples:
        >>> count("1e6")
        1000000
    """
    try:
        value = float(text.replace("_", ""))
    except ValueError:
        raise argparse.ArgumentTypeError(f"'{text}' is not a count") from None
    if not math.isfinite(value) or value < 1 or value != int(value):
        raise argparse.ArgumentTypeError(f"'{text}' is not a positive whole number")
    return int(value)


def int_ranges(text: str) -> list[int]:
    """Parse ``4..32,42,52..102:10`` into a sorted list of unique integers.

    ``a..b`` is inclusive; ``a..b:s`` steps by ``s``.

    Examples:
        >>> int_ranges("4..6,10")
        [4, 5, 6, 10]
    """
    values: set[int] = set()
    try:
        for part in filter(None, (p.strip() for p in text.split(","))):
            if ".." in part:
                span, _, step = part.partition(":")
                lo, hi = (int(v) for v in span.split("..", 1))
                stride = int(step) if step else 1
                if stride < 1 or hi < lo:
                    raise ValueError(part)
                values.update(range(lo, hi + 1, stride))
            else:
                values.add(int(part))
    except ValueError:
        raise argparse.ArgumentTypeError(f"'{text}' is not a list of integer ranges") from None
    if not values:
        raise argparse.ArgumentTypeError("empty range")
    return sorted(values)


def floats(text: str) -> list[float]:
    """Parse ``.05,.01`` into a list of floats."""
    try:
        values = [float(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"'{text}' is not a list of numbers") from None
    if not values or not all(math.isfinite(v) for v in values):
        raise argparse.ArgumentTypeError(f"'{text}' is not a list of finite numbers")
    return values


def probability(text: str) -> float:
    """Parse a number strictly between 0 and 1."""
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"'{text}' is not a number") from None
    if not 0.0 < value < 1.0:
        raise argparse.ArgumentTypeError(f"{value} is not in (0, 1)")
    return value


def samples(text: str) -> list[tuple[int, int]]:
    """Parse ``n1:f1,n2:f2`` checkpoint pairs.

    Examples:
        >>> samples("100:1,1000:1")
        [(100, 1), (1000, 1)]
    """
    pairs = []
    try:
        for part in filter(None, (p.strip() for p in text.split(","))):
            n_cum, f_cum = part.split(":")
            pairs.append((int(n_cum), int(f_cum)))
    except ValueError:
        raise argparse.ArgumentTypeError(f"'{text}' is not a list of n:f pairs") from None
    return pairs


def open_cache(config: RunConfig, settings: Settings) -> NullDistributionCache:
    """Null-distribution cache configured from the command line."""
    return NullDistributionCache(
        settings, trials=config.trials, seed=config.seed, threads=config.threads
    )


def render_model(model: BaseModel) -> bytes:
    """JSON rendering shared by every subcommand."""
    return (model.model_dump_json(indent=2) + "\n").encode("utf-8")


def write_output(payload: bytes, out: str | None) -> None:
    """Write results to ``out`` or to standard output."""
    if out:
        Path(out).write_bytes(payload)
        logger.info("Wrote %d bytes to %s", len(payload), out)
        return
    sys.stdout.write(payload.decode("utf-8"))
    sys.stdout.flush()
