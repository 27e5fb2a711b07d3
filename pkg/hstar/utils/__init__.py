"""Utility modules for random streams, CSV ingestion and the null cache."""
