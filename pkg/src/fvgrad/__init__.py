"""Unstructured finite-volume solver for the 2D Euler equations with a
learned, geometry-aware correction of the gradient reconstruction."""

__version__ = "0.1.0"
