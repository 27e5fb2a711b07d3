"""Application configuration and settings.

This module provides configuration management using pydantic-settings,
loading values from ``HSTAR_``-prefixed environment variables and a .env
file. Command-line flags override whatever is loaded here.
"""

from __future__ import annotations

from functools import lru_cache
import math
from pathlib import Path
from typing import ClassVar, Literal

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

GofTest = Literal["anderson_darling", "lilliefors"]

_SUPPORT_MINIMUM = 1.0 / math.sqrt(2.0)


class Settings(BaseSettings):
    """Tunable defaults for simulation, testing and caching.

    Settings are loaded from environment variables and .env file.
    Environment variables take precedence over .env file values.
    """

    # Valid log levels
    _VALID_LOG_LEVELS: ClassVar[set[str]] = {
        "debug",
        "info",
        "warning",
        "error",
        "critical",
    }

    # Null-distribution cache
    cache_dir: Path = Field(
        default=Path("~/.cache/hstar"),
        description="Directory holding simulated null distributions",
    )
    use_cache: bool = Field(
        default=True, description="Read and write null distributions on disk"
    )
    interpolate_rows: bool = Field(
        default=True,
        description="Interpolate p-values linearly in 1/nu between cached sizes",
    )

    # Monte Carlo
    trials: int = Field(
        default=1_000_000, ge=10_000, description="Trials per null distribution"
    )
    bin_width: float = Field(default=0.0025, gt=0.0, description="Histogram bin width")
    normal_overflow_cap: float = Field(
        default=200.0, description="Exact-value spill threshold for normal priors"
    )
    lognormal_overflow_cap: float = Field(
        default=1e4, description="Exact-value spill threshold for lognormal priors"
    )
    threads: int | None = Field(
        default=None, ge=1, description="Worker threads (None picks CPU count)"
    )

    # Testing procedure
    alpha: float = Field(default=0.05, gt=0.0, lt=1.0, description="Significance level")
    gof_test: GofTest = Field(
        default="lilliefors", description="Goodness-of-fit test for the prior"
    )
    fit_floor: float = Field(
        default=0.01,
        ge=0.0,
        lt=1.0,
        description="GoF p-value below which the decision is withheld",
    )

    # Studies
    power_trials: int = Field(default=10_000, ge=100)
    accumulation_trials: int = Field(default=1_000, ge=10)
    bayes_trials: int = Field(default=100_000, ge=1_000)

    log_level: str = Field(default="warning", description="Logging level")

    model_config = SettingsConfigDict(
        env_prefix="HSTAR_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    @field_validator("cache_dir")
    @classmethod
    def expand_cache_dir(cls, v: Path) -> Path:
        """Expand ``~`` in the cache directory.

        Args:
            v: The configured cache directory.

        Returns:
            The expanded path.
        """
        return v.expanduser()

    @field_validator("normal_overflow_cap", "lognormal_overflow_cap")
    @classmethod
    def validate_overflow_cap(cls, v: float) -> float:
        """Validate that a spill threshold lies above the support minimum.

        Args:
            v: The threshold to validate.

        Returns:
            The validated threshold.

        Raises:
            ValueError: If the threshold does not exceed 1/sqrt(2).
        """
        if not math.isfinite(v) or v <= _SUPPORT_MINIMUM:
            raise ValueError("Overflow cap must be finite and exceed 1/sqrt(2)")
        return v

    @field_validator("log_level")
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        """Validate log level.

        Args:
            v: The log level to validate.

        Returns:
            The validated log level in lowercase.

        Raises:
            ValueError: If log level is not one of the valid levels.
        """
        if v.lower() not in cls._VALID_LOG_LEVELS:
            raise ValueError(f"Log level must be one of: {cls._VALID_LOG_LEVELS}")
        return v.lower()


@lru_cache
def get_settings() -> Settings:
    """Get cached settings instance.

    Returns:
        Settings instance loaded from environment.
    """
    return Settings()
