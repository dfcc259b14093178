"""Numerical laboratory for modulation-space dispersive estimates.

Subpackages build on each other roughly bottom-up:

- ``grid``: periodic lattice, unitary FFT, L^p quadrature
- ``modspace``: isometric window decomposition, modulation norms, frequency
  projections
- ``propagator``: free Schroedinger flow, Galilean twist, Duhamel integral,
  paraboloid extension operator, conserved functionals
- ``variation``: p-variation / atomic calculus for field-valued paths and the
  adapted iteration norms
- ``datagen``: reproducible initial-data families and field serialization
- ``estimates``: ratio sweeps and log-log exponent fits for every measured
  inequality
- ``solver``: Picard contraction solver, split-step oracle, large-data
  frequency-cutoff protocol
- ``cli``: batch experiment runner
"""

from modlab.grid import (
    Field,
    Grid,
    SpectralField,
    from_spectrum,
    lp_norm,
    make_grid,
    spacetime_lp_norm,
    to_spectrum,
)

__all__ = [
    "Field",
    "Grid",
    "SpectralField",
    "from_spectrum",
    "lp_norm",
    "make_grid",
    "spacetime_lp_norm",
    "to_spectrum",
]

__version__ = "0.1.0"
