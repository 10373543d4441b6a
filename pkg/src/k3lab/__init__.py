"""Numerical checks for entropy, cocycles and Brody curves on Kummer and Wehler K3 surfaces."""

__version__ = "0.1.0"
