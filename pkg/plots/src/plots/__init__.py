"""Deterministic figure rendering for gpargmax CSV artifacts."""

from .figures import FigureRequest, KINDS, SchemaError, render

__all__ = ["FigureRequest", "KINDS", "SchemaError", "render"]
