"""Arithmetic and metric analysis of Oeljeklaus-Toma manifolds."""

__version__ = "0.1.0"
