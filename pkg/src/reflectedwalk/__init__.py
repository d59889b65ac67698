"""Tail behavior of the maximum of random walks reflected at general barriers."""

__version__ = "0.1.0"
