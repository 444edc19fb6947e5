"""Spectral toolkit for the 1+1D Dirac equation with electric and pseudoscalar backgrounds."""

__version__ = "0.1.0"
