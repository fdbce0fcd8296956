"""Lorentzian optimal transport, localization and isoperimetry checks on model spacetimes."""

__version__ = "0.1.0"
