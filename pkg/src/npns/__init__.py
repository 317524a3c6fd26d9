"""Pseudo-spectral solver for the stochastic Nernst-Planck-Navier-Stokes
system on the two-dimensional torus, with Fourier-shell transport noise."""

__version__ = "0.1.0"
