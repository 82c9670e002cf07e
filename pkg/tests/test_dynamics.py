import math

import numpy as np
import pytest

from conftest import fd_gradient, fd_laplacian, random_band_field
from nstlab.dynamics import (
    FluidParams,
    NstState,
    energy_functionals,
    f_of_a,
    nonlinear_remainder,
    nonlinear_remainder_unscaled,
    omega,
    omega_rhs,
    recover_physical,
    rhs_scaled,
    rhs_unscaled,
)
from nstlab.errors import ConfigurationError, InsufficientDataError, RecoveryError, VacuumError
from nstlab.littlewood_paley import BesovSpec, build_filter_bank
from nstlab.spectral import SpectralField, make_grid


def _params(**kw):
    base = dict(mu=0.7, lam=0.3, gamma=1.4)
    base.update(kw)
    return FluidParams(**base)


def _smooth_state(grid, amp=0.05, seed=60):
    a = random_band_field(grid, seed=seed, amp=amp, j_max=3)
    u = random_band_field(grid, seed=seed + 1, ncomp=grid.d, amp=amp, j_max=3)
    z = random_band_field(grid, seed=seed + 2, amp=amp, j_max=3)
    return NstState(a, u, z)


class TestFluidParams:
    def test_invariants(self):
        with pytest.raises(ConfigurationError):
            FluidParams(mu=-1.0, lam=0.0)
        with pytest.raises(ConfigurationError):
            FluidParams(mu=0.1, lam=-0.3)
        with pytest.raises(ConfigurationError):
            FluidParams(mu=1.0, lam=0.0, gamma=1.0)
        with pytest.raises(ConfigurationError):
            FluidParams(mu=1.0, lam=0.0, A=0.0)
        with pytest.raises(ConfigurationError):
            FluidParams(mu=1.0, lam=0.0, eps=0.0)


class TestFofA:
    def test_values(self, grid2):
        zero = SpectralField.zeros(grid2)
        assert f_of_a(zero).l2_norm() == 0.0
        one = SpectralField.from_physical(grid2, np.ones(grid2.shape))
        assert np.max(np.abs(f_of_a(one).physical() + 0.5)) < 1e-13

    def test_identity_one_plus_f(self, grid2):
        a = random_band_field(grid2, seed=61, amp=0.3)
        fa = f_of_a(a).physical()
        lhs = 1.0 + fa
        rhs = 1.0 / (1.0 + a.physical())
        assert np.max(np.abs(lhs - rhs)) < 1e-12

    def test_vacuum_guard_names_location(self, grid2):
        vals = np.full(grid2.shape, -1.0 + 1e-9)
        a = SpectralField.from_physical(grid2, vals)
        with pytest.raises(VacuumError) as exc:
            f_of_a(a, delta_vac=1e-6)
        assert exc.value.location is not None


class TestRhsUnscaled:
    def test_constant_state_is_steady(self, grid2):
        p = _params()
        s = NstState(
            SpectralField.from_physical(grid2, np.full(grid2.shape, 0.1)),
            SpectralField.zeros(grid2, 2),
            SpectralField.from_physical(grid2, np.full(grid2.shape, -0.05)),
        )
        td = rhs_unscaled(s, p)
        assert max(td.a.l2_norm(), td.u.l2_norm(), td.z.l2_norm()) == 0.0

    def test_still_fluid_pressure_push(self, grid2):
        p = _params()
        a = random_band_field(grid2, seed=62, amp=0.2, j_max=2)
        z = random_band_field(grid2, seed=63, amp=0.2, j_max=2)
        s = NstState(a, SpectralField.zeros(grid2, 2), z)
        td = rhs_unscaled(s, p, dealias=False)
        from nstlab.spectral import gradient

        expect = -gradient(z).physical() / (1.0 + a.physical())
        assert np.max(np.abs(td.u.physical() - expect)) < 1e-12
        assert td.a.l2_norm() == 0.0
        assert td.z.l2_norm() == 0.0

    def test_matches_finite_difference_oracle(self):
        # centered second-order differences on the same grid, refined twice
        p = _params()
        errs = []
        for N in (16, 32, 64):
            g = make_grid(2, N, 2 * np.pi)
            x, y = g.coordinates()
            a_p = 0.05 * np.cos(x) * np.cos(y)
            u_p = 0.05 * np.stack([np.sin(x) * np.cos(2 * y), np.cos(2 * x) * np.sin(y)])
            z_p = 0.05 * np.sin(x + y)
            s = NstState(
                SpectralField.from_physical(g, a_p),
                SpectralField.from_physical(g, u_p),
                SpectralField.from_physical(g, z_p),
            )
            td = rhs_unscaled(s, p, dealias=False)
            h = g.dx
            div_u = fd_gradient(u_p[0], h, 0) + fd_gradient(u_p[1], h, 1)
            gz = np.stack([fd_gradient(z_p, h, 0), fd_gradient(z_p, h, 1)])
            fa = -a_p / (1 + a_p)
            da = -div_u - (fd_gradient(a_p * u_p[0], h, 0) + fd_gradient(a_p * u_p[1], h, 1))
            visc = np.stack(
                [
                    p.mu * fd_laplacian(u_p[i], h, 2)
                    + (p.mu + p.lam) * np.stack([fd_gradient(div_u, h, 0), fd_gradient(div_u, h, 1)])[i]
                    for i in range(2)
                ]
            )
            adv = np.stack(
                [
                    u_p[0] * fd_gradient(u_p[i], h, 0) + u_p[1] * fd_gradient(u_p[i], h, 1)
                    for i in range(2)
                ]
            )
            du = visc - gz - adv - fa * gz + fa * visc
            dz = -p.gamma * div_u - (u_p[0] * gz[0] + u_p[1] * gz[1]) / 1.0 - p.gamma * z_p * div_u
            # oracle uses FD for u.grad z as well
            gzf = np.stack([fd_gradient(z_p, h, 0), fd_gradient(z_p, h, 1)])
            dz = -p.gamma * div_u - (u_p[0] * gzf[0] + u_p[1] * gzf[1]) - p.gamma * z_p * div_u
            err = max(
                np.max(np.abs(td.a.physical() - da)),
                np.max(np.abs(td.u.physical() - du)),
                np.max(np.abs(td.z.physical() - dz)),
            )
            errs.append(err)
        orders = [math.log2(errs[i] / errs[i + 1]) for i in range(len(errs) - 1)]
        assert min(orders) >= 1.9

    def test_vacuum_error_propagates(self, grid2):
        p = _params()
        s = NstState(
            SpectralField.from_physical(grid2, np.full(grid2.shape, -0.9999)),
            SpectralField.zeros(grid2, 2),
            SpectralField.zeros(grid2),
        )
        with pytest.raises(VacuumError):
            rhs_unscaled(s, p)


class TestRhsScaled:
    def test_eps_one_matches_unscaled(self, grid2):
        p = _params(eps=1.0)
        s = _smooth_state(grid2)
        t1 = rhs_unscaled(s, p)
        t2 = rhs_scaled(s, p, eps=1.0)
        for x, y in zip(t1, t2):
            assert (x - y).l2_norm() <= 1e-12 * max(x.l2_norm(), 1.0)

    def test_steady_state(self, grid2):
        p = _params(eps=0.25)
        s = NstState(
            SpectralField.from_physical(grid2, np.full(grid2.shape, 0.2)),
            SpectralField.zeros(grid2, 2),
            SpectralField.from_physical(grid2, np.full(grid2.shape, 0.1)),
        )
        td = rhs_scaled(s, p)
        assert max(td.a.l2_norm(), td.u.l2_norm(), td.z.l2_norm()) == 0.0

    def test_bad_eps(self, grid2):
        p = _params()
        s = _smooth_state(grid2)
        with pytest.raises(ConfigurationError):
            rhs_scaled(s, p, eps=-0.5)

    def test_unscaled_remainder_matches_scaled_at_eps_one(self, grid2):
        p = _params(eps=1.0)
        s = _smooth_state(grid2, seed=70)
        r1 = nonlinear_remainder(s, p, eps=1.0)
        r2 = nonlinear_remainder_unscaled(s, p)
        for x, y in zip(r1, r2):
            assert (x - y).l2_norm() <= 1e-13 * max(x.l2_norm(), 1.0)

    def test_scaling_change_of_variables(self):
        # A smooth profile F with (unscaled) residual R transforms under
        # G(t, x) = F(t/eps^2, x/eps)/eps into a profile whose scaled-system
        # residual is eps^-3 R(t/eps^2, x/eps); verified symbolically.
        sympy = pytest.importorskip("sympy")
        t, x, y = sympy.symbols("t x y", real=True)
        eps = sympy.Rational(1, 3)
        mu, lam, gam = sympy.Rational(1, 2), sympy.Rational(1, 4), sympy.Rational(7, 5)

        amp = sympy.Rational(1, 20)
        F_a = amp * sympy.cos(x) * sympy.cos(y) * sympy.exp(-t)
        F_u = [
            amp * sympy.sin(x) * sympy.cos(y) * sympy.exp(-t / 2),
            amp * sympy.cos(x) * sympy.sin(y) * sympy.exp(-t / 2),
        ]
        F_z = amp * sympy.sin(x + y) * sympy.exp(-t)

        def residual(a, u, z, mub, lamb, scale):
            # velocity-form system with singular factor 1/scale
            div_u = sympy.diff(u[0], x) + sympy.diff(u[1], y)
            lap = lambda f: sympy.diff(f, x, 2) + sympy.diff(f, y, 2)
            fa = -scale * a / (1 + scale * a)
            ra = sympy.diff(a, t) + div_u / scale + sympy.diff(a * u[0], x) + sympy.diff(a * u[1], y)
            ru = []
            for i, (ui, xi) in enumerate(zip(u, (x, y))):
                visc = mub * lap(ui) + (mub + lamb) * sympy.diff(div_u, xi)
                adv = u[0] * sympy.diff(ui, x) + u[1] * sympy.diff(ui, y)
                ru.append(
                    sympy.diff(ui, t)
                    + adv
                    + (1 + fa) * sympy.diff(z, xi) / scale
                    - (1 + fa) * visc
                )
            rz = (
                sympy.diff(z, t)
                + gam * div_u / scale
                + u[0] * sympy.diff(z, x)
                + u[1] * sympy.diff(z, y)
                + gam * z * div_u
            )
            return [ra, *ru, rz]

        R = residual(F_a, F_u, F_z, mu, lam, 1)
        sub = {t: t / eps**2, x: x / eps, y: y / eps}
        G_a = F_a.subs(sub, simultaneous=True) / eps
        G_u = [f.subs(sub, simultaneous=True) / eps for f in F_u]
        G_z = F_z.subs(sub, simultaneous=True) / eps
        S = residual(G_a, G_u, G_z, mu, lam, eps)

        rng = np.random.default_rng(7)
        pts = rng.uniform(0.1, 2.0, size=(12, 3))
        for s_expr, r_expr in zip(S, R):
            fs = sympy.lambdify((t, x, y), s_expr, "numpy")
            fr = sympy.lambdify((t, x, y), r_expr.subs(sub, simultaneous=True), "numpy")
            for tt, xx, yy in pts:
                lhs = fs(tt, xx, yy)
                rhs = float(eps) ** (-3) * fr(tt, xx, yy)
                assert abs(lhs - rhs) < 1e-8 * max(1.0, abs(rhs))


class TestOmega:
    def test_arithmetic(self, grid2):
        a = SpectralField.from_physical(grid2, np.full(grid2.shape, 0.1))
        z = SpectralField.from_physical(grid2, np.full(grid2.shape, 0.05))
        s = NstState(a, SpectralField.zeros(grid2, 2), z)
        w = omega(s, 1.4)
        assert np.max(np.abs(w.physical() - 0.09)) < 1e-14

    def test_rhs_vanishes_without_flow(self, grid2):
        p = _params()
        s = NstState(
            random_band_field(grid2, seed=64, amp=0.1),
            SpectralField.zeros(grid2, 2),
            random_band_field(grid2, seed=65, amp=0.1),
        )
        assert omega_rhs(s, p).l2_norm() == 0.0

    def test_consistency_with_state_tendency(self, grid2):
        p = _params()
        s = _smooth_state(grid2, seed=66)
        td = rhs_unscaled(s, p)
        lhs = p.gamma * td.a - td.z
        rhs = omega_rhs(s, p)
        assert (lhs - rhs).l2_norm() <= 1e-10 * max(rhs.l2_norm(), 1e-10)


class TestRecovery:
    def test_reference_state(self, grid2):
        p = _params(A=1.0)
        s = NstState(SpectralField.zeros(grid2), SpectralField.zeros(grid2, 2), SpectralField.zeros(grid2))
        rho, P, theta = recover_physical(s, p)
        assert np.allclose([rho, P, theta], 1.0)

    def test_theta_example(self, grid2):
        p = FluidParams(mu=1.0, lam=0.0, gamma=2.0, A=1.0)
        s = NstState(
            SpectralField.zeros(grid2),
            SpectralField.zeros(grid2, 2),
            SpectralField.from_physical(grid2, np.full(grid2.shape, 3.0)),
        )
        _, _, theta = recover_physical(s, p)
        assert np.max(np.abs(theta - 2.0)) < 1e-12

    def test_pressure_law_round_trip(self, grid2):
        p = FluidParams(mu=1.0, lam=0.0, gamma=1.7, A=2.5)
        s = _smooth_state(grid2, amp=0.1, seed=67)
        rho, P, theta = recover_physical(s, p)
        assert np.max(np.abs(P - p.A * (rho * theta) ** p.gamma)) < 1e-12

    def test_nonpositive_pressure(self, grid2):
        p = _params()
        s = NstState(
            SpectralField.zeros(grid2),
            SpectralField.zeros(grid2, 2),
            SpectralField.from_physical(grid2, np.full(grid2.shape, -1.5)),
        )
        with pytest.raises(RecoveryError):
            recover_physical(s, p)


class TestEnergyFunctionals:
    def test_zero_series(self, grid2):
        s = NstState(SpectralField.zeros(grid2), SpectralField.zeros(grid2, 2), SpectralField.zeros(grid2))
        out = energy_functionals([0.0, 1.0], [s, s.copy()])
        assert all(v == 0.0 for v in out.values())

    def test_single_snapshot(self, grid2):
        s = _smooth_state(grid2, seed=68)
        out = energy_functionals([0.0], [s])
        assert out["D"] == 0.0
        assert out["X0"] > 0.0
        assert out["X"] > 0.0

    def test_empty_series(self):
        with pytest.raises(InsufficientDataError):
            energy_functionals([], [])

    def test_decaying_series_dissipation(self, grid2):
        # u(t) = e^{-t} g: the L1-in-time norm approaches the norm of g
        bank = build_filter_bank(grid2)
        g = random_band_field(grid2, seed=69, ncomp=2)
        T, n = 30.0, 601
        times = np.linspace(0.0, T, n)
        states = [
            NstState(
                SpectralField.zeros(grid2),
                SpectralField(grid2, math.exp(-t) * g.coeff),
                SpectralField.zeros(grid2),
                t,
            )
            for t in times
        ]
        out = energy_functionals(times, states, bank)
        target = bank.besov_norm(g, BesovSpec(grid2.d / 2.0 + 1))
        assert out["D"] == pytest.approx(target * (1 - math.exp(-T)), rel=2e-3)
