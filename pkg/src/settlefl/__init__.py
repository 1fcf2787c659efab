"""Reward settlement protocol toolkit: circuits, simulated chain, economics."""

__version__ = "0.1.0"
