"""Nonreciprocal superradiance in a rotating, directionally squeezed dual-mode cavity."""

__version__ = "0.1.0"
