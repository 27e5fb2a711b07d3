"""Statistic, random variates and simulated null distributions."""
