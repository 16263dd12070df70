"""Rendering of mfcq training logs into convergence and error figures."""

from .figures import PlotSpec, build_figures, render
from .io import SchemaError, load_params, load_value_error

__all__ = ["PlotSpec", "build_figures", "render", "SchemaError", "load_params", "load_value_error"]
