"""Simulation and fault injection for self-checking dual-rail logic."""

__version__ = "0.1.0"
