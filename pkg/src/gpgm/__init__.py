"""Generalized pretty good measurements for finite and gridded quantum ensembles."""
__version__ = "0.1.0"
