"""Reliance-aware autonomous decision aid simulator."""

__version__ = "0.1.0"
