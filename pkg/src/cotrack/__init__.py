"""Planar robot-object co-tracking toolkit."""

__version__ = "0.1.0"
