import numpy as np
import pytest

from nstlab.spectral import SpectralField, make_grid


@pytest.fixture
def grid2():
    return make_grid(2, 32, 2 * np.pi)


@pytest.fixture
def grid3():
    return make_grid(3, 16, 2 * np.pi)


def random_band_field(grid, seed=0, ncomp=1, amp=1.0, j_max=None, n_modes=10):
    """Seeded band-limited random trig field (mean-free)."""
    rng = np.random.default_rng(seed)
    j_max = j_max or max(2, grid.N // 4)
    coords = grid.coordinates()
    out = np.zeros((ncomp,) + grid.shape)
    for i in range(ncomp):
        for _ in range(n_modes):
            j = rng.integers(-j_max, j_max + 1, grid.d)
            if not np.any(j):
                continue
            phase = rng.uniform(0, 2 * np.pi)
            w = np.zeros(grid.shape)
            for c, jj in zip(coords, j):
                w = w + jj * c
            out[i] += rng.normal() * np.cos(w + phase)
    return SpectralField.from_physical(grid, amp * out / n_modes)


def fd_gradient(vals, h, axis):
    return (np.roll(vals, -1, axis=axis) - np.roll(vals, 1, axis=axis)) / (2 * h)


def fd_laplacian(vals, h, ndim, offset=0):
    out = np.zeros_like(vals)
    for ax in range(offset, offset + ndim):
        out += (np.roll(vals, -1, axis=ax) - 2 * vals + np.roll(vals, 1, axis=ax)) / h**2
    return out
