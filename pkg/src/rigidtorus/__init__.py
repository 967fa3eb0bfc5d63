"""Exact and certified computations around multiplicative semigroup actions on the circle."""

__version__ = "0.1.0"
