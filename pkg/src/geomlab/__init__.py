"""Numerical and exact-arithmetic checks for complex, spinorial and gauge geometry."""

__version__ = "0.1.0"
