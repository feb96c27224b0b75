"""Batch figure renderer for kerrosc CSV/JSON run artifacts."""

from .figures import FIGURE_IDS, FigureSpec, build_specs, render, render_all
from .schemas import Matrix, RunInfo, SchemaError, Table, discover_runs, read_matrix, read_table

__version__ = "0.1.0"

__all__ = [
    "FIGURE_IDS",
    "FigureSpec",
    "Matrix",
    "RunInfo",
    "SchemaError",
    "Table",
    "build_specs",
    "discover_runs",
    "read_matrix",
    "read_table",
    "render",
    "render_all",
    "__version__",
]
