"""Discrete-time TASEP with sequential update.

Exact laws by enumeration, simulation, the dual RSK correspondence, the
Toeplitz operator calculus, and multipoint distributions as Fredholm
determinants of a biorthogonal kernel or of a random-walk hitting kernel.
"""
__version__ = "0.1.0"
