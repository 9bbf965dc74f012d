"""Approximate energy-parity values in simple stochastic games and build
epsilon-optimal finite-memory strategies for both players."""

from enpar.game import Configuration, Edge, GameGraph, Owner, dual, shift_colors, validate

__all__ = [
    "Configuration",
    "Edge",
    "GameGraph",
    "Owner",
    "dual",
    "shift_colors",
    "validate",
]

__version__ = "0.1.0"
