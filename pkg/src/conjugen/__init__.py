"""Conjugate function pairs from holomorphic generating functions."""

__version__ = "0.1.0"
