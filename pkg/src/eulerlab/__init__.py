"""Pseudospectral laboratory for continuity estimates of 2D Euler in vorticity form."""

__version__ = "0.1.0"
