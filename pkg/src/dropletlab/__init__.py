"""Numerical laboratory for Coulomb-gas droplets, cusps and limiting kernels."""
__version__ = "0.1.0"
