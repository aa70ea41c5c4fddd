"""Batching Bullwhip - order batching, variance decomposition and the bullwhip ratio."""

__version__ = "1.0.0"
