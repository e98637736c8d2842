"""Fractal interpolation, energy and approximation on the Sierpinski gasket."""

__version__ = "0.1.0"
