"""Renderer for the analysis pipeline's CSV/JSON outputs.

Consumes only the documented flat-CSV formats; never mutates inputs.
Rendering is deterministic: fixed backend, figure geometry and layout
seed, so identical inputs produce byte-identical images.
"""

from figs.render import FigureSpec, SchemaError, render

__all__ = ["FigureSpec", "SchemaError", "render"]
