"""The h* statistic for global outlier evaluation."""

__version__ = "0.1.0"
