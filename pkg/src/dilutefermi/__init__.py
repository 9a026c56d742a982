"""Numerical toolkit for the ground-state energy of a dilute Fermi gas.

Five pieces: zero-energy scattering (the length a and the pair profile),
closed-form low-density energy expansions, certified operator lower bounds,
Slater overlap machinery for correlated trial states, and a Jastrow-Slater
variational Monte Carlo upper bound.  Units are hbar = 2m = 1 everywhere, so
energies are inverse lengths squared.
"""

__version__ = "0.1.0"
