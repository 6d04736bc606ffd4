"""Barren-plateau-resistant training of parameterized quantum circuits."""

__version__ = "0.1.0"
