"""Null-distribution cache.

This module provides a memory and disk cache of simulated null
distributions, keyed by standardized prior, side, sample size and bin
width. Lookups fall through memory, then ``cache_dir``, then simulation;
freshly simulated distributions are written back to disk.
"""

from __future__ import annotations

import logging
from pathlib import Path
import re
from typing import TYPE_CHECKING, Any

from hstar.errors import MalformedTableFile
from hstar.models import DistributionSpec, NullDistribution, Side
from hstar.stats import montecarlo

if TYPE_CHECKING:
    from hstar.config import Settings

logger = logging.getLogger(__name__)

_FILE_N = re.compile(r"__n(\d+)__")

# prior key, side, n, bin width, overflow cap
CacheKey = tuple[str, str, int, float, float]


class NullDistributionCache:
    """Cache of null distributions with optional interpolation across n.

    The cache satisfies the ``NullSource`` protocol used by the testing
    procedure. Disk files are only reused when they hold at least
    ``trials`` simulated samples.

    Attributes:
        settings: Application settings (cache directory, binning, caps).
        trials: Trials per simulated distribution.
        seed: Root seed used for distributions simulated by this cache.
        threads: Worker threads for simulation.
    """

    def __init__(
        self,
        settings: Settings,
        *,
        trials: int | None = None,
        seed: int = 0,
        threads: int | None = None,
    ) -> None:
        """Initialize the cache.

        Args:
            settings: Application settings.
            trials: Trials per distribution (defaults to ``settings.trials``).
            seed: Root seed for simulation.
            threads: Worker threads (defaults to ``settings.threads``).
        """
        self.settings = settings
        self.trials = trials or settings.trials
        self.seed = seed
        self.threads = threads or settings.threads
        self._memory: dict[CacheKey, NullDistribution] = {}
        self.hits = 0
        self.misses = 0
        logger.info(
            "Null cache at %s (disk %s, %d trials)",
            settings.cache_dir,
            "on" if settings.use_cache else "off",
            self.trials,
        )

    @staticmethod
    def _side(prior: DistributionSpec, side: Side) -> Side:
        return "max" if prior.standardized().symmetric else side

    def _cap(self, prior: DistributionSpec) -> float:
        if prior.kind == "lognormal":
            return self.settings.lognormal_overflow_cap
        return self.settings.normal_overflow_cap

    def _key(self, prior: DistributionSpec, n: int, side: Side) -> CacheKey:
        return (
            prior.cache_key(),
            self._side(prior, side),
            n,
            self.settings.bin_width,
            self._cap(prior),
        )

    def _suffix(self, prior: DistributionSpec) -> str:
        return f"__w{self.settings.bin_width:g}__cap{self._cap(prior):g}.csv"

    def path_for(self, prior: DistributionSpec, n: int, side: Side = "max") -> Path:
        """File that holds (or would hold) the distribution for ``n``.

        The name carries the prior key, side, ``n``, bin width and overflow
        cap, so tables binned differently never share a file.
        """
        side = self._side(prior, side)
        name = f"{prior.cache_key()}__{side}__n{n}{self._suffix(prior)}"
        return self.settings.cache_dir / name

    def _load(self, path: Path, prior: DistributionSpec) -> NullDistribution | None:
        try:
            null = montecarlo.load_null(path)
        except MalformedTableFile as e:
            logger.warning("Ignoring unreadable cache file %s: %s", path, e.message)
            return None
        bin_width = self.settings.bin_width
        # the stored cap is the requested one rounded up to a bin edge
        if null.bin_width != bin_width or abs(null.cap - self._cap(prior)) >= bin_width:
            logger.warning(
                "Ignoring cache file %s binned with width %g and cap %g",
                path,
                null.bin_width,
                null.cap,
            )
            return None
        if null.total < self.trials:
            logger.debug("Cache file %s holds %d < %d trials", path, null.total, self.trials)
            return None
        return null

    def cached(
        self, prior: DistributionSpec, n: int, side: Side = "max"
    ) -> NullDistribution | None:
        """Return the distribution from memory or disk without simulating."""
        side = self._side(prior, side)
        key = self._key(prior, n, side)
        if key in self._memory:
            return self._memory[key]
        if not self.settings.use_cache:
            return None
        path = self.path_for(prior, n, side)
        if not path.exists():
            return None
        null = self._load(path, prior)
        if null is not None:
            logger.info("Loaded null distribution n=%d from %s", n, path)
            self._memory[key] = null
        return null

    def get(self, prior: DistributionSpec, n: int, side: Side = "max") -> NullDistribution:
        """Return the distribution for ``n``, simulating it if necessary."""
        null = self.cached(prior, n, side)
        if null is not None:
            self.hits += 1
            return null
        self.misses += 1
        side = self._side(prior, side)
        null = montecarlo.simulate_null(
            prior,
            n,
            self.trials,
            self.seed,
            side=side,
            bin_width=self.settings.bin_width,
            cap=self._cap(prior),
            threads=self.threads,
        )
        self._memory[self._key(prior, n, side)] = null
        if self.settings.use_cache:
            path = self.path_for(prior, n, side)
            try:
                montecarlo.save_null(path, null)
                logger.info("Cached null distribution n=%d at %s", n, path)
            except OSError as e:
                logger.warning("Could not write cache file %s: %s", path, e)
        return null

    def _cached_sizes(self, prior: DistributionSpec, side: Side) -> list[int]:
        side = self._side(prior, side)
        wanted = self._key(prior, 0, side)
        sizes = {k[2] for k in self._memory if k[:2] + k[3:] == wanted[:2] + wanted[3:]}
        if self.settings.use_cache and self.settings.cache_dir.is_dir():
            pattern = f"{prior.cache_key()}__{side}__n*{self._suffix(prior)}"
            for path in self.settings.cache_dir.glob(pattern):
                match = _FILE_N.search(path.name)
                if match:
                    sizes.add(int(match.group(1)))
        return sorted(sizes)

    def _bracket(
        self, prior: DistributionSpec, n: int, side: Side
    ) -> tuple[NullDistribution, NullDistribution, float] | None:
        if not self.settings.interpolate_rows:
            return None
        sizes = self._cached_sizes(prior, side)
        below = [m for m in sizes if m < n]
        above = [m for m in sizes if m > n]
        if not below or not above:
            return None
        lo = self.cached(prior, below[-1], side)
        hi = self.cached(prior, above[0], side)
        if lo is None or hi is None:
            return None
        # weight of the smaller size, linear in 1/nu
        inv = 1.0 / (n - 2)
        inv_lo, inv_hi = 1.0 / lo.nu, 1.0 / hi.nu
        weight = (inv - inv_hi) / (inv_lo - inv_hi)
        logger.info(
            "Interpolating n=%d between cached n=%d and n=%d (weight %.3f)",
            n,
            lo.n,
            hi.n,
            weight,
        )
        return lo, hi, weight

    def p_value(
        self, h_obs: float, n: int, prior: DistributionSpec, side: Side = "max"
    ) -> float:
        """p-value of ``h_obs`` for sample size ``n`` under ``prior``."""
        null = self.cached(prior, n, side)
        if null is None:
            bracket = self._bracket(prior, n, side)
            if bracket is not None:
                lo, hi, weight = bracket
                return weight * montecarlo.p_value(lo, h_obs) + (
                    1.0 - weight
                ) * montecarlo.p_value(hi, h_obs)
            null = self.get(prior, n, side)
        else:
            self.hits += 1
        return montecarlo.p_value(null, h_obs)

    def critical_value(
        self, alpha: float, n: int, prior: DistributionSpec, side: Side = "max"
    ) -> float:
        """Critical h* at level ``alpha`` for sample size ``n`` under ``prior``."""
        null = self.cached(prior, n, side)
        if null is None:
            bracket = self._bracket(prior, n, side)
            if bracket is not None:
                lo, hi, weight = bracket
                return weight * montecarlo.critical_value(lo, alpha) + (
                    1.0 - weight
                ) * montecarlo.critical_value(hi, alpha)
            null = self.get(prior, n, side)
        else:
            self.hits += 1
        return montecarlo.critical_value(null, alpha)

    def close(self) -> None:
        """Drop the in-memory distributions."""
        logger.info(
            "Closing null cache (%d in memory, %d hits, %d simulated)",
            len(self._memory),
            self.hits,
            self.misses,
        )
        self._memory.clear()

    def __enter__(self) -> NullDistributionCache:
        """Context manager entry."""
        return self

    def __exit__(self, exc_type: Any, exc_val: Any, exc_tb: Any) -> None:
        """Context manager exit with cleanup."""
        self.close()
