"""Figures from bandit benchmark summary CSVs."""

from .render import GridMismatchError, SeriesBundle, load_summary, render

__all__ = ["GridMismatchError", "SeriesBundle", "load_summary", "render"]

__version__ = "0.1.0"
