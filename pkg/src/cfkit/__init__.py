"""Compute-forward rate regions, nested linear code ensembles and simulation."""

__version__ = "0.1.0"
