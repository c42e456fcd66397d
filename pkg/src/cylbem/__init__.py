"""Spectral-error prediction and Galerkin BEM measurement for boundary
integral equations on a circular PEC cylinder."""

__version__ = "0.1.0"
