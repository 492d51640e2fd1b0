"""Desk-scale simulation of noisy few-qubit NMR experiments.

Modules
-------
qcore       dense linear algebra, gates, standard states, fidelities
channels    Kraus noise channels and Bell-diagonal closed forms
dynamics    Lindblad integration, analytic three-qubit decay solutions, fits
sequences   dynamical-decoupling schedules and protected evolution
tomography  linear inversion and maximum-likelihood state estimation
measures    entropies, discord, negativities
grape       gradient ascent pulse engineering
cli         command-line experiment runner
"""

__version__ = "0.1.0"
