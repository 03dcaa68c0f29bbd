"""Weighted Diophantine approximation over number fields."""
__version__ = "0.1.0"
