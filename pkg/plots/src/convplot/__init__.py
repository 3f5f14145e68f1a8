"""Convergence-graph renderer for optimizer trace CSVs."""

from .render import PlotSpec, aggregate_means, read_traces, render_convergence

__all__ = ["PlotSpec", "aggregate_means", "read_traces", "render_convergence"]

__version__ = "0.1.0"
