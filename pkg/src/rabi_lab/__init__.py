"""Exact diagonalization and closed-form analytics for the indirect quantum Rabi model."""

__version__ = "0.1.0"
