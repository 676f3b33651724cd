"""Symbolic-numeric toolkit for second-order PDEs that describe
pseudo-spherical surfaces: families of associated 1-form coefficients,
structure-equation verification, second-fundamental-form analysis, and
numeric immersion of solution patches into R^3."""

__version__ = "0.1.0"
