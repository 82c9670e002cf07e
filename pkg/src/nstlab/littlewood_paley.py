"""Discrete dyadic decomposition and homogeneous Besov / mixed-time norms.

The mother low-pass chi is a smooth radial bump equal to 1 on |xi| <= 3/4
and vanishing for |xi| >= 4/3; the annular function is
phi(xi) = chi(xi/2) - chi(xi), supported in 3/4 <= |xi| <= 8/3.  Dyadic
blocks act as Fourier multipliers phi(2^-k xi).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import (
    ConfigurationError,
    EmptyRangeWarning,
    InsufficientDataError,
    RangeError,
)
from .spectral import Grid, SpectralField

CHI_FLAT = 0.75          # chi == 1 below this radius
CHI_SUPPORT = 4.0 / 3.0  # chi == 0 above this radius
PHI_LO = 0.75
PHI_HI = 8.0 / 3.0


def _smooth_step(rho):
    """C-infinity step from 0 at rho<=0 to 1 at rho>=1."""
    rho = np.asarray(rho, dtype=float)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(rho > 0, np.exp(-1.0 / np.where(rho > 0, rho, 1.0)), 0.0)
        b = np.where(rho < 1, np.exp(-1.0 / np.where(rho < 1, 1.0 - rho, 1.0)), 0.0)
    return a / (a + b)


def chi(r):
    """Radial low-pass profile: 1 on [0, 3/4], 0 on [4/3, inf)."""
    rho = (np.asarray(r, dtype=float) - CHI_FLAT) / (CHI_SUPPORT - CHI_FLAT)
    return 1.0 - _smooth_step(rho)


def phi(r):
    """Annular profile chi(r/2) - chi(r), supported in [3/4, 8/3]."""
    return chi(np.asarray(r, dtype=float) / 2.0) - chi(r)


@dataclass(frozen=True)
class BesovSpec:
    """Besov norm selector: regularity s, integrability p, summation r.

    The range selector picks the blocks that enter the outer l^r sum:
    'all', 'low' (k <= 0), 'high' (k >= -1), or the Mach-split selectors
    'low-eps' (2^k eps <= 2^k0) and 'high-eps' (2^k eps >= 2^k0).
    """

    s: float
    p: float = 2
    r: float = 1
    range: str = "all"
    eps: float | None = None

    def __post_init__(self):
        if self.p < 2:
            raise ConfigurationError("integrability p must be >= 2")
        if self.r not in (1, 2, math.inf):
            raise ConfigurationError("summation exponent r must be 1, 2 or inf")
        if self.range not in ("all", "low", "high", "low-eps", "high-eps"):
            raise ConfigurationError(f"unknown range selector {self.range!r}")
        if self.range.endswith("eps") and not (self.eps and self.eps > 0):
            raise ConfigurationError("eps selectors need a positive Mach number")

    def selects(self, k, k0):
        if self.range == "all":
            return True
        if self.range == "low":
            return k <= 0
        if self.range == "high":
            return k >= -1
        if self.range == "low-eps":
            return 2.0**k * self.eps <= 2.0**k0
        return 2.0**k * self.eps >= 2.0**k0


class DyadicFilterBank:
    """Block multipliers phi(2^-k xi) over a finite window [k_min, k_max].

    Built either for a periodic Grid (multipliers tabulated on the lattice)
    or for an arbitrary set of radial frequencies.  Immutable once built.
    """

    def __init__(self, grid_or_radii, k_min, k_max, k0=4):
        if k_min >= k_max:
            raise ConfigurationError("need k_min < k_max")
        if k0 < 0 or int(k0) != k0:
            raise ConfigurationError("k0 must be a nonnegative integer")
        self.k_min = int(k_min)
        self.k_max = int(k_max)
        self.k0 = int(k0)
        if isinstance(grid_or_radii, Grid):
            self.grid = grid_or_radii
            radii = grid_or_radii.kmag
        else:
            self.grid = None
            radii = np.asarray(grid_or_radii, dtype=float)
        self.radii = radii
        self._mult = {k: phi(radii / 2.0**k) for k in range(self.k_min, self.k_max + 1)}
        self._check_coverage()

    @property
    def blocks(self):
        return range(self.k_min, self.k_max + 1)

    def certified_band(self):
        """Radii on which the block sum provably equals 1."""
        return (CHI_SUPPORT * 2.0**self.k_min, 1.5 * 2.0**self.k_max)

    def _check_coverage(self):
        r = self.radii[self.radii > 0]
        if r.size == 0:
            return
        lo, hi = self.certified_band()
        uncovered = []
        if r.min() < lo:
            kneed = math.floor(math.log2(r.min() / CHI_SUPPORT))
            uncovered.extend(range(kneed, self.k_min))
        if r.max() > hi:
            kneed = math.ceil(math.log2(r.max() / 1.5))
            uncovered.extend(range(self.k_max + 1, kneed + 1))
        if uncovered:
            raise ConfigurationError(
                f"filter window [{self.k_min}, {self.k_max}] leaves shells {uncovered} "
                f"uncovered for frequencies in [{r.min():g}, {r.max():g}]"
            )

    def multiplier(self, k):
        if k not in self._mult:
            raise RangeError(f"block {k} outside window [{self.k_min}, {self.k_max}]")
        return self._mult[k]

    def partition_sum(self):
        """sum_k phi(2^-k xi) over the window, on the tabulated radii."""
        return sum(self._mult.values())

    def dyadic_block(self, f: SpectralField, k) -> SpectralField:
        """Frequency-localized piece of f on the k-th annulus."""
        if self.grid is None:
            raise ConfigurationError("this bank was built on a radial axis, not a grid")
        if f.grid.spectral_shape != self.grid.spectral_shape:
            raise ConfigurationError("field grid does not match the bank's grid")
        return SpectralField(f.grid, self.multiplier(k) * f.coeff)

    def block_lp_norm(self, f: SpectralField, k, p):
        """L^p norm of the k-th block; Fourier side for p=2, trapezoid otherwise."""
        blk = self.dyadic_block(f, k)
        if p == 2:
            return blk.l2_norm()
        vals = blk.physical()
        if blk.ncomp > 1:
            mag = np.sqrt(np.sum(vals**2, axis=0))
        else:
            mag = np.abs(vals)
        cell = f.grid.dx ** f.grid.d
        if p == math.inf:
            return float(np.max(mag))
        return float((np.sum(mag**p) * cell) ** (1.0 / p))

    def besov_norm(self, f: SpectralField, spec: BesovSpec):
        """l^r over selected blocks of 2^{ks} ||block_k f||_{L^p}."""
        terms = []
        for k in self.blocks:
            if not spec.selects(k, self.k0):
                continue
            terms.append(2.0 ** (k * spec.s) * self.block_lp_norm(f, k, spec.p))
        if not terms:
            warnings.warn(
                f"Besov norm over empty block range {spec.range!r}", EmptyRangeWarning
            )
            return 0.0
        return _lr(terms, spec.r)

    def besov_norm_pair(self, fields, spec: BesovSpec):
        """Norm of a tuple, ||(f, g)|| = ||f|| + ||g||."""
        return sum(self.besov_norm(f, spec) for f in fields)

    def intersection_norm(self, f: SpectralField, s_low, s_high):
        """||f||_{B^s \\cap B^s'} = low part at s plus high part at s' (s < s')."""
        if not s_low < s_high:
            raise ConfigurationError("intersection norm needs s < s'")
        return self.besov_norm(f, BesovSpec(s_low, range="low")) + self.besov_norm(
            f, BesovSpec(s_high, range="high")
        )

    def sum_space_norm(self, f: SpectralField, s_low, s_high):
        """||f||_{B^s + B^s'} = low part at s plus high part at s' (s > s')."""
        if not s_low > s_high:
            raise ConfigurationError("sum-space norm needs s > s'")
        return self.besov_norm(f, BesovSpec(s_low, range="low")) + self.besov_norm(
            f, BesovSpec(s_high, range="high")
        )

    def low_field(self, f: SpectralField) -> SpectralField:
        """f^l = sum_{k <= -1} block_k f (field-split convention)."""
        return self._field_split(f, lambda k: k <= -1)

    def high_field(self, f: SpectralField) -> SpectralField:
        """f^h = sum_{k >= 0} block_k f."""
        return self._field_split(f, lambda k: k >= 0)

    def _field_split(self, f, pred):
        acc = np.zeros_like(f.coeff)
        for k in self.blocks:
            if pred(k):
                acc += self.dyadic_block(f, k).coeff
        return SpectralField(f.grid, acc)

    def chemin_lerner_norm(self, times, fields, kappa, spec: BesovSpec):
        """Mixed norm: time-L^kappa per block, then 2^{ks} weights and l^r.

        times are the (strictly increasing) sample instants of fields;
        kappa in {1, 2, inf}.  Finite kappa uses the trapezoid rule.
        """
        times = np.asarray(times, dtype=float)
        if kappa != math.inf and len(times) < 2:
            raise InsufficientDataError("time-L^kappa with kappa < inf needs >= 2 samples")
        if len(fields) != len(times):
            raise ConfigurationError("times and fields must align")
        terms = []
        for k in self.blocks:
            if not spec.selects(k, self.k0):
                continue
            series = np.array([self.block_lp_norm(f, k, spec.p) for f in fields])
            if kappa == math.inf:
                tk = float(np.max(series))
            else:
                tk = float(np.trapezoid(series**kappa, times) ** (1.0 / kappa))
            terms.append(2.0 ** (k * spec.s) * tk)
        if not terms:
            warnings.warn(
                f"Chemin-Lerner norm over empty block range {spec.range!r}",
                EmptyRangeWarning,
            )
            return 0.0
        return _lr(terms, spec.r)

    def chemin_lerner_intersection(self, times, fields, kappa, s_low, s_high):
        """Mixed-time analogue of the intersection norm (s_low < s_high)."""
        lo = self.chemin_lerner_norm(times, fields, kappa, BesovSpec(s_low, range="low"))
        hi = self.chemin_lerner_norm(times, fields, kappa, BesovSpec(s_high, range="high"))
        return lo + hi


def _lr(terms, r):
    arr = np.asarray(terms, dtype=float)
    if r == 1:
        return float(arr.sum())
    if r == 2:
        return float(np.sqrt(np.sum(arr**2)))
    return float(arr.max())


def build_filter_bank(grid_or_radii, k_min=None, k_max=None, k0=4) -> DyadicFilterBank:
    """Build a bank; window defaults cover the resolvable band of a grid."""
    if isinstance(grid_or_radii, Grid):
        g = grid_or_radii
        kmin_lattice = 2.0 * np.pi / g.L
        kmax_lattice = float(np.sqrt(g.d)) * np.pi * g.N / g.L
        if k_min is None:
            k_min = math.floor(math.log2(kmin_lattice / CHI_SUPPORT))
        if k_max is None:
            k_max = math.ceil(math.log2(kmax_lattice / 1.5))
    else:
        r = np.asarray(grid_or_radii, dtype=float)
        r = r[r > 0]
        if k_min is None:
            k_min = math.floor(math.log2(r.min() / CHI_SUPPORT))
        if k_max is None:
            k_max = math.ceil(math.log2(r.max() / 1.5))
    return DyadicFilterBank(grid_or_radii, k_min, k_max, k0)
