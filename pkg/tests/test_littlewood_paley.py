import math

import numpy as np
import pytest

from conftest import random_band_field
from nstlab.errors import (
    ConfigurationError,
    EmptyRangeWarning,
    InsufficientDataError,
    RangeError,
)
from nstlab.littlewood_paley import (
    BesovSpec,
    DyadicFilterBank,
    build_filter_bank,
    chi,
    phi,
)
from nstlab.spectral import SpectralField, gradient, make_grid


class TestMotherFunctions:
    def test_chi_flat_and_support(self):
        assert chi(0.0) == 1.0
        assert chi(0.5) == 1.0
        assert chi(0.75) == pytest.approx(1.0)
        assert chi(4.0 / 3.0) == 0.0
        assert chi(2.0) == 0.0
        r = np.linspace(0, 3, 301)
        assert np.all(np.diff(chi(r)) <= 1e-12)  # non-increasing

    def test_phi_support(self):
        assert phi(0.5) == 0.0
        assert phi(0.7) == 0.0
        assert phi(1.0) > 0.0
        assert phi(3.0) == 0.0
        r = np.linspace(0, 4, 801)
        vals = phi(r)
        assert np.all(vals[(r < 0.75) | (r > 8.0 / 3.0)] == 0.0)

    def test_partition_of_unity_at_unit_radius(self):
        bank = DyadicFilterBank(np.array([1.0]), k_min=-4, k_max=4)
        assert abs(bank.partition_sum()[0] - 1.0) < 1e-12

    def test_partition_on_certified_band(self):
        radii = np.geomspace(0.05, 20.0, 400)
        bank = build_filter_bank(radii)
        lo, hi = bank.certified_band()
        mask = (radii >= lo) & (radii <= hi)
        assert np.max(np.abs(bank.partition_sum()[mask] - 1.0)) < 1e-12

    def test_window_too_narrow_lists_shells(self):
        radii = np.geomspace(0.01, 100.0, 50)
        with pytest.raises(ConfigurationError, match="uncovered"):
            DyadicFilterBank(radii, k_min=0, k_max=2)


class TestDyadicBlocks:
    def test_block_of_annulus_limited_field(self, grid2):
        bank = build_filter_bank(grid2)
        f = random_band_field(grid2, seed=40)
        blk0 = bank.dyadic_block(f, 2)
        for k in bank.blocks:
            if abs(k - 2) >= 2:
                prod = bank.dyadic_block(blk0, k)
                assert prod.l2_norm() == 0.0

    def test_constant_field_has_no_blocks(self, grid2):
        f = SpectralField.from_physical(grid2, np.full(grid2.shape, 3.7))
        bank = build_filter_bank(grid2)
        for k in bank.blocks:
            assert bank.dyadic_block(f, k).l2_norm() == 0.0

    def test_resummation_recovers_mean_free_part(self, grid2):
        f = SpectralField.from_physical(grid2, 0.9 + random_band_field(grid2, seed=41).physical())
        bank = build_filter_bank(grid2)
        acc = np.zeros_like(f.coeff)
        for k in bank.blocks:
            acc += bank.dyadic_block(f, k).coeff
        target = f.coeff.copy()
        target[(slice(None),) + (0,) * grid2.d] = 0.0
        err = SpectralField(grid2, acc - target).l2_norm()
        assert err < 1e-10 * f.l2_norm()

    def test_out_of_window_block(self, grid2):
        bank = build_filter_bank(grid2)
        f = random_band_field(grid2, seed=42)
        with pytest.raises(RangeError):
            bank.dyadic_block(f, bank.k_max + 1)


def _annulus_unit_field(grid, bank, k=0, seed=43):
    """Unit-L2 field with Fourier support in the k-th annulus."""
    f = random_band_field(grid, seed=seed)
    mult = phi(grid.kmag / 2.0**k)
    g = SpectralField(grid, np.where(mult > 0, 1.0, 0.0) * f.coeff)
    return (1.0 / g.l2_norm()) * g


class TestBesovNorms:
    def test_single_annulus_mass_bounds_and_oracle(self, grid2):
        bank = build_filter_bank(grid2)
        s = 0.8
        f = _annulus_unit_field(grid2, bank, k=0)
        norm = bank.besov_norm(f, BesovSpec(s))
        delta = 2.0 ** (abs(s) + 1)
        assert 1.0 - delta <= norm <= 1.0 + delta
        # independent block-sum oracle on the Fourier side
        w = grid2.hermitian_weight
        expected = 0.0
        for k in bank.blocks:
            mass = math.sqrt(
                grid2.volume
                * float(np.sum(w * np.abs(phi(grid2.kmag / 2.0**k) * f.coeff) ** 2))
            )
            expected += 2.0 ** (k * s) * mass
        assert norm == pytest.approx(expected, rel=1e-12)

    def test_besov_022_band_and_quadratic_identity(self, grid2):
        bank = build_filter_bank(grid2)
        f = random_band_field(grid2, seed=44)
        ratio = bank.besov_norm(f, BesovSpec(0.0, r=2)) / f.l2_norm()
        assert 1.0 / math.sqrt(2.0) - 1e-12 <= ratio <= 1.0 + 1e-12
        w = grid2.hermitian_weight
        cross = sum(
            float(np.sum(w * (bank.dyadic_block(f, k).coeff * np.conj(f.coeff)).real))
            for k in bank.blocks
        ) * grid2.volume
        assert cross == pytest.approx(f.l2_norm() ** 2, rel=1e-10)

    def test_scaling_relation_on_resampled_field(self):
        g = make_grid(2, 32, 2 * np.pi)
        gs = make_grid(2, 16, np.pi)
        f = random_band_field(g, seed=45, j_max=4)
        bank, banks = build_filter_bank(g), build_filter_bank(gs)
        # f(2x) on the half box: same integer modes, doubled frequencies
        idx = np.fft.fftfreq(16, d=1.0 / 16).astype(int)
        c = np.zeros((1,) + gs.spectral_shape, dtype=complex)
        for i_new, j in enumerate(idx):
            c[0, i_new, :9] = f.coeff[0, j % 32, :9]
        fdil = SpectralField(gs, c)
        for s in (-0.5, 0.7, 1.3):
            ratio = banks.besov_norm(fdil, BesovSpec(s)) / (
                2.0 ** (s - 1.0) * bank.besov_norm(f, BesovSpec(s))
            )
            assert 0.95 <= ratio <= 1.05

    def test_low_high_selectors(self, grid2):
        bank = build_filter_bank(grid2)
        f = random_band_field(grid2, seed=46)
        low = bank.besov_norm(f, BesovSpec(0.5, range="low"))
        high = bank.besov_norm(f, BesovSpec(0.5, range="high"))
        total = bank.besov_norm(f, BesovSpec(0.5))
        # one-block overlap at k in {-1, 0}: low + high >= total
        assert low + high >= total - 1e-12
        k_lo = [k for k in bank.blocks if k <= 0]
        manual = sum(2.0 ** (k * 0.5) * bank.block_lp_norm(f, k, 2) for k in k_lo)
        assert low == pytest.approx(manual, rel=1e-12)

    def test_eps_selectors(self, grid2):
        bank = build_filter_bank(grid2, k0=4)
        f = random_band_field(grid2, seed=47)
        eps = 1.0 / 64.0
        lo = bank.besov_norm(f, BesovSpec(0.5, range="low-eps", eps=eps))
        # 2^k eps <= 2^4  <=>  k <= 10: every block in this window qualifies
        assert lo == pytest.approx(bank.besov_norm(f, BesovSpec(0.5)), rel=1e-12)
        with pytest.warns(EmptyRangeWarning):
            hi = bank.besov_norm(f, BesovSpec(0.5, range="high-eps", eps=eps))
        assert hi == 0.0

    def test_intersection_and_sum_space(self, grid2):
        bank = build_filter_bank(grid2)
        f = random_band_field(grid2, seed=48)
        inter = bank.intersection_norm(f, 0.5, 1.5)
        lo = bank.besov_norm(f, BesovSpec(0.5, range="low"))
        hi = bank.besov_norm(f, BesovSpec(1.5, range="high"))
        assert inter == lo + hi
        sums = bank.sum_space_norm(f, 1.5, 0.5)
        lo2 = bank.besov_norm(f, BesovSpec(1.5, range="low"))
        hi2 = bank.besov_norm(f, BesovSpec(0.5, range="high"))
        assert sums == lo2 + hi2
        with pytest.raises(ConfigurationError):
            bank.intersection_norm(f, 1.5, 0.5)

    def test_bernstein_two_sided(self, grid2):
        bank = build_filter_bank(grid2)
        f = random_band_field(grid2, seed=49)
        for k in (1, 2, 3):
            blk = bank.dyadic_block(f, k)
            ratio = gradient(blk).l2_norm() / blk.l2_norm()
            assert 0.75 * 2.0**k <= ratio <= (8.0 / 3.0) * 2.0**k

    def test_interpolation_inequality(self, grid2):
        bank = build_filter_bank(grid2)
        f = random_band_field(grid2, seed=50)
        s1, s2 = -0.5, 1.5
        for theta in (0.25, 0.5, 0.75):
            smid = theta * s1 + (1 - theta) * s2
            lhs = bank.besov_norm(f, BesovSpec(smid))
            c = 4.0 / (theta * (1 - theta) * (s2 - s1))
            rhs = (
                c
                * bank.besov_norm(f, BesovSpec(s1, r=math.inf)) ** theta
                * bank.besov_norm(f, BesovSpec(s2)) ** (1 - theta)
            )
            assert lhs <= rhs

    def test_p_infinity_and_p4_norms(self, grid2):
        bank = build_filter_bank(grid2)
        f = random_band_field(grid2, seed=51)
        n4 = bank.besov_norm(f, BesovSpec(0.0, p=4))
        ninf = bank.besov_norm(f, BesovSpec(0.0, p=math.inf))
        assert n4 > 0 and ninf > 0
        # blockwise Hoelder ordering on the unit-volume-normalized box
        blk = bank.dyadic_block(f, 0)
        vol = grid2.volume
        l2 = blk.l2_norm() / vol**0.5
        l4 = bank.block_lp_norm(f, 0, 4) / vol**0.25
        linf = bank.block_lp_norm(f, 0, math.inf)
        assert l2 <= l4 * (1 + 1e-12) <= linf * (1 + 1e-12)


class TestCheminLerner:
    def test_constant_series_sup(self, grid2):
        bank = build_filter_bank(grid2)
        f = random_band_field(grid2, seed=52)
        times = np.linspace(0.0, 3.0, 7)
        spec = BesovSpec(0.5)
        cl = bank.chemin_lerner_norm(times, [f] * 7, math.inf, spec)
        assert cl == pytest.approx(bank.besov_norm(f, spec), rel=1e-13)

    def test_exponential_decay_l1(self, grid2):
        bank = build_filter_bank(grid2)
        g = random_band_field(grid2, seed=53)
        T, n = 30.0, 1501
        times = np.linspace(0.0, T, n)
        fields = [SpectralField(grid2, math.exp(-t) * g.coeff) for t in times]
        spec = BesovSpec(0.5)
        cl = bank.chemin_lerner_norm(times, fields, 1, spec)
        exact = (1.0 - math.exp(-T)) * bank.besov_norm(g, spec)
        assert cl == pytest.approx(exact, rel=1e-3)

    def test_minkowski_ordering(self, grid2):
        bank = build_filter_bank(grid2)
        f = random_band_field(grid2, seed=54)
        times = np.linspace(0.0, 2.0, 9)
        fields = [
            SpectralField(grid2, f.coeff * math.exp(-t) * (1 + 0.4 * math.sin(5 * t)))
            for t in times
        ]
        spec = BesovSpec(0.5)
        cl_inf = bank.chemin_lerner_norm(times, fields, math.inf, spec)
        plain = max(bank.besov_norm(s, spec) for s in fields)
        assert cl_inf >= plain - 1e-12

    def test_insufficient_samples(self, grid2):
        bank = build_filter_bank(grid2)
        f = random_band_field(grid2, seed=55)
        with pytest.raises(InsufficientDataError):
            bank.chemin_lerner_norm([0.0], [f], 1, BesovSpec(0.5))
        # kappa = inf works with a single sample
        one = bank.chemin_lerner_norm([0.0], [f], math.inf, BesovSpec(0.5))
        assert one == pytest.approx(bank.besov_norm(f, BesovSpec(0.5)), rel=1e-13)


class TestBesovSpecValidation:
    def test_bad_specs(self):
        with pytest.raises(ConfigurationError):
            BesovSpec(0.0, p=1)
        with pytest.raises(ConfigurationError):
            BesovSpec(0.0, r=3)
        with pytest.raises(ConfigurationError):
            BesovSpec(0.0, range="weird")
        with pytest.raises(ConfigurationError):
            BesovSpec(0.0, range="low-eps")

    def test_bad_bank_window(self):
        with pytest.raises(ConfigurationError):
            DyadicFilterBank(np.array([1.0]), k_min=3, k_max=3)
        with pytest.raises(ConfigurationError):
            DyadicFilterBank(np.array([1.0]), k_min=-2, k_max=2, k0=-1)
