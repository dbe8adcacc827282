"""Deterministic 3D bin packing with support and weight constraints."""

__version__ = "0.1.0"
