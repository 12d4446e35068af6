"""Numerical classification of Toeplitz CAR flow symbols."""

__version__ = "0.1.0"
