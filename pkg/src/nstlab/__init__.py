"""Spectral laboratory for a compressible Navier-Stokes-transport system.

Subpackages:
  spectral          grids, FFT fields, multipliers, Leray / Hodge projections
  littlewood_paley  dyadic blocks, Besov and Chemin-Lerner norms
  dynamics          the (a, u, z) system, tendencies, diagnostics
  integrator        exact-linear split-step time stepping
  greens            closed-form linear propagator and whole-space decay curves
  inns              incompressible inhomogeneous reference solver
  experiments       declarative experiment runners (also exposed via the CLI)
"""

__version__ = "0.1.0"
