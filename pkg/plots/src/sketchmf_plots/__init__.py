"""Batch plotting for sketchmf convergence CSVs and diagnostics JSON."""

from .render import SchemaError, read_curves, render

__all__ = ["SchemaError", "read_curves", "render"]
