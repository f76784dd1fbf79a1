"""Quadruple inequalities on four-point metric configurations."""

__version__ = "0.1.0"
