"""Capacity toolkit for the two-cell interfering multiple-access channel."""

__version__ = "0.1.0"
