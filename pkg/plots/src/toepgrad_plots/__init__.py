"""Batch figure rendering for toepgrad benchmark CSV files."""

from .figures import FigureSpec, SchemaError, extract_series, render

__version__ = "0.1.0"
