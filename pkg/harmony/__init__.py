"""Harmonized correlated matching ensembles with a tensor network likelihood oracle."""

__version__ = "0.1.0"
