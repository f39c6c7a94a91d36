"""Conformal surface morphing toolkit."""

__version__ = "0.1.0"
