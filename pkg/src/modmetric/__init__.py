"""Computable modular (pseudo)metric spaces: gauges, uniformities, compactness."""

__version__ = "0.1.0"
