"""Figure generator for the metacausal experiment CSVs."""

from .render import KINDS, SchemaError, render

__all__ = ["KINDS", "SchemaError", "render"]
