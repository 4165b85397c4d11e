"""Driven composite quadratic well: levels, dipole basis, Bessel-series propagator."""
__version__ = "0.1.0"
