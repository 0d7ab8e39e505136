"""Figure regeneration for vme run outputs, reading only the CSV/JSON schemas."""

from .figures import FigureSpec, SchemaError, render

__all__ = ["FigureSpec", "SchemaError", "render"]

__version__ = "0.1.0"
