"""Numerical workbench: symmetrised Hankel truncations, Mehler transforms,
1D lattice scattering, and spectral bands of step functions of operators."""

__version__ = "0.1.0"
