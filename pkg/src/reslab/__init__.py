"""Numerical resonance laboratory for hyperbolic surfaces and open billiards.

Modules
-------
schottky   Schottky groups, primitive geodesics, limit sets
xfer       Selberg zeta by transfer-operator determinant and cycle expansion
billiard   N-disk billiards, periodic orbits, dynamical zeta
thermo     pressure, entropy, Bowen dimension, gap prediction
zeros      argument-principle zero finding and resonance-set analytics
fup        discrete fractal uncertainty principle
cli        batch front-end
"""
__version__ = "0.1.0"
