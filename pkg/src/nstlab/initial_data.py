"""Named analytic initial-data profiles for the torus experiments.

Profiles compose three ingredients scaled by a single amplitude knob:
a solenoidal Taylor-Green velocity, a traveling acoustic wave supported on
the |j| = 1 modes whose pressure trace is sqrt(gamma) times its velocity
trace (so the acoustic energy travels instead of sloshing), and a smooth
density perturbation.  'random-band' draws seeded random phases on a low
mode band instead.
"""

from __future__ import annotations

import numpy as np

from .dynamics import NstState
from .errors import ConfigurationError
from .spectral import Grid, SpectralField

PROFILE_NAMES = ("mixed", "taylor-green", "traveling-acoustic", "random-band", "zero")


def _taylor_green(grid: Grid):
    if grid.d == 2:
        x, y = grid.coordinates()
        return np.stack([np.sin(x) * np.cos(y), -np.cos(x) * np.sin(y)])
    x, y, z = grid.coordinates()
    return np.stack(
        [
            np.sin(x) * np.cos(y) * np.cos(z),
            -np.cos(x) * np.sin(y) * np.cos(z),
            np.zeros(grid.shape),
        ]
    )


def _acoustic(grid: Grid, gamma):
    coords = grid.coordinates()
    u = np.stack([np.sin(c) for c in coords])
    z = np.sqrt(gamma) * sum(np.sin(c) for c in coords)
    return u, z


def _density_bump(grid: Grid):
    coords = grid.coordinates()
    a = np.ones(grid.shape)
    for c in coords:
        a = a * np.cos(c)
    return a


def _random_band(grid: Grid, rng, ncomp, j_lo=1, j_hi=3, n_modes=8):
    out = np.zeros((ncomp,) + grid.shape)
    coords = grid.coordinates()
    for i in range(ncomp):
        for _ in range(n_modes):
            j = rng.integers(j_lo, j_hi + 1, grid.d) * rng.choice([-1, 1], grid.d)
            phase = rng.uniform(0.0, 2.0 * np.pi)
            wave = np.zeros(grid.shape)
            for c, jj in zip(coords, j):
                wave = wave + jj * c
            out[i] += np.cos(wave + phase)
        out[i] /= n_modes
    return out


def build_initial_state(
    grid: Grid,
    gamma,
    profile="mixed",
    amplitude=1e-2,
    vortical_weight=1.0,
    acoustic_weight=0.1,
    density_weight=0.5,
    seed=0,
) -> NstState:
    """Assemble (a0, u0, z0) from a named profile."""
    if profile not in PROFILE_NAMES:
        raise ConfigurationError(f"unknown profile {profile!r}; choose from {PROFILE_NAMES}")
    a = np.zeros(grid.shape)
    u = np.zeros((grid.d,) + grid.shape)
    z = np.zeros(grid.shape)
    if profile in ("mixed", "taylor-green"):
        u = u + amplitude * vortical_weight * _taylor_green(grid)
        a = a + amplitude * density_weight * _density_bump(grid)
    if profile in ("mixed", "traveling-acoustic"):
        ua, za = _acoustic(grid, gamma)
        u = u + amplitude * acoustic_weight * ua
        z = z + amplitude * acoustic_weight * za
        if profile == "traveling-acoustic":
            a = np.zeros(grid.shape)
    if profile == "random-band":
        rng = np.random.default_rng(seed)
        a = amplitude * density_weight * _random_band(grid, rng, 1)[0]
        u = amplitude * vortical_weight * _random_band(grid, rng, grid.d)
        z = amplitude * acoustic_weight * _random_band(grid, rng, 1)[0]
    return NstState(
        SpectralField.from_physical(grid, a),
        SpectralField.from_physical(grid, u),
        SpectralField.from_physical(grid, z),
    )
