"""Numerical experiments on hyperbolic Brownian motion, flows on the unit
tangent bundle of a compact hyperbolic surface, and Poisson-kernel measures."""

__version__ = "0.1.0"
