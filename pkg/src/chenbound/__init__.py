"""Numerical verification of an explicit Chen bound for Goldbach representations."""

__version__ = "0.1.0"
