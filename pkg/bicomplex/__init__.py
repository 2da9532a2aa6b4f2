"""Exact symbolic engine for the variational bicomplex and BV certification."""

__version__ = "1.0.0"
