"""Certified explicit bounds for the Chebyshev function theta(x)."""

__version__ = "0.1.0"
