"""Verification toolkit for Lie bialgebras of bi-symplectic type."""

__version__ = "0.1.0"
