"""Aharonov-Bohm eigenvalues with colliding poles: magnetic and crack formulations."""
__version__ = "0.1.0"
