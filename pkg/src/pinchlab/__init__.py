"""Numerical laboratory for comparison geometry on pinched negatively curved model surfaces."""

__version__ = "0.1.0"
