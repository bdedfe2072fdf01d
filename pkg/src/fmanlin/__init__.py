"""Exact chart calculus for linear multiplications on vector bundle total spaces."""

__version__ = "0.1.0"
