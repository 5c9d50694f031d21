"""Bending energies of narrow developable ribbons and their vanishing-width limit."""

__version__ = "0.1.0"
