"""Starshaped hypersurfaces under inverse and locally constrained curvature flows."""

__version__ = "0.1.0"
