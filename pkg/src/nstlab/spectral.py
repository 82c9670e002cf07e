"""Periodic spectral core: grids, fields, Fourier multipliers, projectors.

Fields are real-valued on a periodic box [0, L)^d and are stored through
their real-to-complex FFT coefficients, so Hermitian symmetry is structural
rather than enforced after the fact.  All norms are box integrals (trapezoid
rule on the periodic grid, which coincides with the rectangle rule).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, SingularModeError


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid with its frequency lattice.

    Parameters
    ----------
    d : int
        Spatial dimension, 2 or 3.
    N : int
        Points per axis; even and at least 8.  Powers of two recommended.
    L : float
        Box length.  Frequencies are xi_j = 2*pi*j/L with integer modes
        j in [-N/2, N/2); the zero frequency appears exactly once.
    """

    d: int
    N: int
    L: float

    def __post_init__(self):
        if self.d not in (2, 3):
            raise ConfigurationError(f"dimension must be 2 or 3, got {self.d}")
        if self.N % 2 != 0 or self.N < 8:
            raise ConfigurationError(f"N must be even and >= 8, got {self.N}")
        if not self.L > 0:
            raise ConfigurationError(f"box length must be positive, got {self.L}")
        dx = self.L / self.N
        k1 = 2.0 * np.pi * np.fft.fftfreq(self.N, d=dx)          # full axis
        kr = 2.0 * np.pi * np.fft.rfftfreq(self.N, d=dx)         # rfft axis
        axes = [k1] * (self.d - 1) + [kr]
        ks = np.meshgrid(*axes, indexing="ij", sparse=True)
        k2 = sum(k**2 for k in ks)
        kmag = np.sqrt(k2)
        object.__setattr__(self, "dx", dx)
        object.__setattr__(self, "k_axes", tuple(np.asarray(k) for k in ks))
        object.__setattr__(self, "k2", np.asarray(k2))
        object.__setattr__(self, "kmag", np.asarray(kmag))
        # 2/3-rule mask: keep |j| <= N/3 on every axis
        jcut = self.N // 3
        kcut = 2.0 * np.pi * jcut / self.L
        mask = np.ones(self.k2.shape, dtype=bool)
        for k in ks:
            mask &= np.abs(k) <= kcut + 1e-12
        object.__setattr__(self, "dealias_mask", mask)
        # rfft weights for Parseval sums: conjugate modes counted twice
        w = np.full(self.k2.shape, 2.0)
        w[..., 0] = 1.0
        if self.N % 2 == 0:
            w[..., -1] = 1.0
        object.__setattr__(self, "hermitian_weight", w)

    @property
    def shape(self):
        return (self.N,) * self.d

    @property
    def spectral_shape(self):
        return (self.N,) * (self.d - 1) + (self.N // 2 + 1,)

    @property
    def volume(self):
        return self.L**self.d

    def coordinates(self):
        """Physical coordinate arrays, shape d x grid shape."""
        x1 = np.arange(self.N) * self.dx
        return np.meshgrid(*([x1] * self.d), indexing="ij")

    def integer_modes(self):
        """Full integer mode lattice as an (N^d, d) array."""
        j = np.fft.fftfreq(self.N, d=1.0 / self.N).astype(int)
        grids = np.meshgrid(*([j] * self.d), indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=-1)

    def normalization(self):
        """Transform conventions recorded in run manifests."""
        return {
            "transform": "numpy.fft.rfftn",
            "forward_scale": "1/N^d",
            "mode_ordering": "numpy fftfreq per axis, rfft on last axis",
            "integer_mode_range": [-self.N // 2, self.N // 2 - 1],
            "dealias_rule": "zero modes with any |j| > N//3",
        }


class SpectralField:
    """Real scalar or vector field with physical and Fourier views.

    Fourier coefficients use the convention f(x) = sum_j c_j exp(i xi_j . x),
    i.e. rfftn output divided by N^d.  `coeff` has shape (ncomp,) + spectral
    grid shape.
    """

    __slots__ = ("grid", "coeff")

    def __init__(self, grid: Grid, coeff: np.ndarray):
        coeff = np.asarray(coeff, dtype=complex)
        if coeff.ndim == grid.d:
            coeff = coeff[None]
        if coeff.shape[1:] != grid.spectral_shape:
            raise ConfigurationError(
                f"coefficient shape {coeff.shape} does not match grid {grid.spectral_shape}"
            )
        self.grid = grid
        self.coeff = coeff

    # -- constructors -------------------------------------------------
    @classmethod
    def from_physical(cls, grid: Grid, values: np.ndarray):
        values = np.asarray(values, dtype=float)
        if values.ndim == grid.d:
            values = values[None]
        if values.shape[1:] != grid.shape:
            raise ConfigurationError(
                f"field shape {values.shape} does not match grid {grid.shape}"
            )
        coeff = np.fft.rfftn(values, axes=tuple(range(1, grid.d + 1))) / grid.N**grid.d
        return cls(grid, coeff)

    @classmethod
    def zeros(cls, grid: Grid, ncomp: int = 1):
        return cls(grid, np.zeros((ncomp,) + grid.spectral_shape, dtype=complex))

    # -- views ---------------------------------------------------------
    @property
    def ncomp(self):
        return self.coeff.shape[0]

    @property
    def is_vector(self):
        return self.ncomp == self.grid.d

    def physical(self):
        """Physical values, shape (ncomp,) + grid shape (squeezed for scalars)."""
        vals = np.fft.irfftn(
            self.coeff * self.grid.N**self.grid.d,
            s=self.grid.shape,
            axes=tuple(range(1, self.grid.d + 1)),
        )
        return vals[0] if self.ncomp == 1 else vals

    def copy(self):
        return SpectralField(self.grid, self.coeff.copy())

    def mean(self):
        """Spatial mean per component."""
        m = self.coeff[(slice(None),) + (0,) * self.grid.d].real
        return float(m[0]) if self.ncomp == 1 else m.copy()

    def integral(self):
        """Box integral per component."""
        m = self.mean()
        return m * self.grid.volume

    def l2_norm(self):
        """sqrt of the box integral of |f|^2, summed over components."""
        w = self.grid.hermitian_weight
        s = np.sum(w * np.abs(self.coeff) ** 2)
        return float(np.sqrt(self.grid.volume * s))

    def dealias(self):
        """Apply the 2/3-rule truncation in place and return self."""
        self.coeff *= self.grid.dealias_mask
        return self

    # -- arithmetic (component-wise, same grid) -------------------------
    def __add__(self, other):
        return SpectralField(self.grid, self.coeff + other.coeff)

    def __sub__(self, other):
        return SpectralField(self.grid, self.coeff - other.coeff)

    def __mul__(self, scalar):
        return SpectralField(self.grid, self.coeff * scalar)

    __rmul__ = __mul__

    def component(self, i):
        return SpectralField(self.grid, self.coeff[i : i + 1].copy())


def make_grid(d, N, L):
    """Build a periodic grid; raises ConfigurationError on invalid input."""
    return Grid(d=int(d), N=int(N), L=float(L))


# ----------------------------------------------------------------------
# Fourier-multiplier calculus
# ----------------------------------------------------------------------

def gradient(f: SpectralField) -> SpectralField:
    """Gradient of a scalar field, returned as a d-component field."""
    if f.ncomp != 1:
        raise ConfigurationError("gradient expects a scalar field")
    g = f.grid
    out = np.empty((g.d,) + g.spectral_shape, dtype=complex)
    for i, k in enumerate(g.k_axes):
        out[i] = 1j * k * f.coeff[0]
    return SpectralField(g, out)


def divergence(u: SpectralField) -> SpectralField:
    """Divergence of a vector field."""
    if not u.is_vector:
        raise ConfigurationError("divergence expects a d-component vector field")
    g = u.grid
    out = np.zeros(g.spectral_shape, dtype=complex)
    for i, k in enumerate(g.k_axes):
        out += 1j * k * u.coeff[i]
    return SpectralField(g, out[None])


def curl(u: SpectralField) -> SpectralField:
    """Antisymmetric curl, curl_ij = d_j u^i - d_i u^j.

    Returns the scalar reduction curl_12 in d=2 and the three independent
    entries (0,1), (0,2), (1,2) of the antisymmetric matrix in d=3.
    """
    if not u.is_vector:
        raise ConfigurationError("curl expects a d-component vector field")
    g = u.grid
    pairs = [(0, 1)] if g.d == 2 else [(0, 1), (0, 2), (1, 2)]
    out = np.empty((len(pairs),) + g.spectral_shape, dtype=complex)
    for n, (i, j) in enumerate(pairs):
        out[n] = 1j * g.k_axes[j] * u.coeff[i] - 1j * g.k_axes[i] * u.coeff[j]
    return SpectralField(g, out)


def laplacian(f: SpectralField) -> SpectralField:
    return SpectralField(f.grid, -f.grid.k2 * f.coeff)


def lambda_power(f: SpectralField, s: float) -> SpectralField:
    """Apply Lambda^s = (-Delta)^(s/2).

    For s < 0 the zero-mode multiplier |xi|^s is undefined; fields must be
    mean-free.  For s >= 0 the zero mode is annihilated (s > 0) or kept (s=0).
    """
    g = f.grid
    zero = (slice(None),) + (0,) * g.d
    if s < 0:
        mean = np.abs(f.coeff[zero])
        scale = np.sqrt(np.max(np.sum(np.abs(f.coeff) ** 2, axis=0))) + 1e-300
        if np.any(mean > 1e-13 * max(scale, 1e-13)):
            raise SingularModeError(
                f"lambda_power(s={s}) needs a mean-free field; zero mode magnitude {mean.max():g}"
            )
    with np.errstate(divide="ignore"):
        mult = np.where(g.kmag > 0, g.kmag, 1.0) ** s
    mult = np.where(g.kmag > 0, mult, 0.0 if s != 0 else 1.0)
    return SpectralField(g, mult * f.coeff)


def spectral_derivative(f: SpectralField, kind, s: float | None = None) -> SpectralField:
    """Dispatch wrapper over the multiplier operators.

    kind is one of 'gradient', 'divergence', 'curl', 'laplacian',
    'lambda_power' (the latter takes the exponent s).
    """
    if kind == "gradient":
        return gradient(f)
    if kind == "divergence":
        return divergence(f)
    if kind == "curl":
        return curl(f)
    if kind == "laplacian":
        return laplacian(f)
    if kind == "lambda_power":
        if s is None:
            raise ConfigurationError("lambda_power requires the exponent s")
        return lambda_power(f, s)
    raise ConfigurationError(f"unknown derivative kind {kind!r}")


# ----------------------------------------------------------------------
# Projectors and the Hodge decomposition
# ----------------------------------------------------------------------

def leray_project(u: SpectralField):
    """Split u into (Pu, Qu) with P = Id + grad (-Delta)^{-1} div.

    Pu is divergence-free, Qu = -grad (-Delta)^{-1} div u is curl-free.
    The zero mode (constant drift) is assigned entirely to Pu.
    """
    if not u.is_vector:
        raise ConfigurationError("leray_project expects a vector field")
    g = u.grid
    with np.errstate(invalid="ignore", divide="ignore"):
        inv_k2 = np.where(g.k2 > 0, 1.0 / np.where(g.k2 > 0, g.k2, 1.0), 0.0)
    kdotu = np.zeros(g.spectral_shape, dtype=complex)
    for i, k in enumerate(g.k_axes):
        kdotu += k * u.coeff[i]
    q = np.empty_like(u.coeff)
    for i, k in enumerate(g.k_axes):
        q[i] = k * kdotu * inv_k2
    qu = SpectralField(g, q)
    pu = SpectralField(g, u.coeff - q)
    return pu, qu


def hodge_decompose(u: SpectralField, carry_drift: bool = False):
    """Return (m, n[, drift]) with m = Lambda^{-1} div u, n = Lambda^{-1} curl u.

    The mean of u is a constant drift that the decomposition cannot see; it
    is returned separately when carry_drift is true and is an error
    otherwise.
    """
    if not u.is_vector:
        raise ConfigurationError("hodge_decompose expects a vector field")
    g = u.grid
    drift = u.mean()
    if not carry_drift and np.max(np.abs(drift)) > 1e-13 * max(u.l2_norm(), 1e-13):
        raise SingularModeError(
            "hodge_decompose needs a mean-free field (pass carry_drift=True to keep the drift)"
        )
    m = lambda_power(_zero_mean(divergence(u)), -1.0)
    n = lambda_power(_zero_mean(curl(u)), -1.0)
    if carry_drift:
        return m, n, drift
    return m, n


def hodge_reconstruct(m: SpectralField, n: SpectralField, drift=None) -> SpectralField:
    """Inverse of hodge_decompose: u = -Lambda^{-1} grad m - Lambda^{-1} curl* n.

    curl* contracts the antisymmetric matrix n over its second index,
    (curl* n)^i = sum_j d_j n_ij, which together with
    Delta = grad div - curl curl reproduces u exactly.
    """
    g = m.grid
    gm = gradient(m)
    u = -lambda_power(gm, -1.0).coeff
    if g.d == 2:
        # n is the scalar curl_12; curl* n = (d_2 n, -d_1 n)
        ks = g.k_axes
        cn = np.stack([1j * ks[1] * n.coeff[0], -1j * ks[0] * n.coeff[0]])
    else:
        # n holds entries (0,1), (0,2), (1,2); n_ij antisymmetric
        ks = g.k_axes
        n01, n02, n12 = n.coeff
        cn = np.stack(
            [
                1j * (ks[1] * n01 + ks[2] * n02),
                1j * (-ks[0] * n01 + ks[2] * n12),
                1j * (-ks[0] * n02 - ks[1] * n12),
            ]
        )
    u = u - _apply_inv_lambda(g, cn)
    out = SpectralField(g, u)
    if drift is not None:
        zero = (slice(None),) + (0,) * g.d
        out.coeff[zero] = np.asarray(drift, dtype=complex)
    return out


def hodge_norm_factor(d):
    """Factor c with ||u||^2 = ||m||^2 + c ||n||^2 for mean-free u.

    n stores one entry per antisymmetric pair (i < j), so the factor is 1
    in both dimensions; it would be 1/2 for the full matrix convention.
    """
    return 1.0


def _apply_inv_lambda(g, coeff):
    with np.errstate(divide="ignore"):
        mult = np.where(g.kmag > 0, 1.0 / np.where(g.kmag > 0, g.kmag, 1.0), 0.0)
    return mult * coeff


def _zero_mean(f: SpectralField) -> SpectralField:
    zero = (slice(None),) + (0,) * f.grid.d
    c = f.coeff.copy()
    c[zero] = 0.0
    return SpectralField(f.grid, c)


def pointwise(grid: Grid, func, *fields, dealias=True):
    """Evaluate func on the physical values of fields; optionally dealias."""
    phys = [f.physical() for f in fields]
    out = SpectralField.from_physical(grid, func(*phys))
    if dealias:
        out.dealias()
    return out
