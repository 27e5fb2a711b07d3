"""Subcommands of the ``hstar`` command line."""
