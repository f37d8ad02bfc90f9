"""Simulator for gravitationally induced entanglement between two path-superposed masses."""

__version__ = "0.1.0"
