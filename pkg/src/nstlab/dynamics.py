"""State and right-hand sides of the compressible transport-coupled system.

The state is the triple (a, u, z): density perturbation rho - 1, velocity,
and pressure perturbation P - 1.  Tendencies implement the unscaled system

    d/dt a = -div u - div(a u)
    d/dt u = mu Lap u + (mu+lam) grad div u - grad z
             - u.grad u - f(a) grad z + f(a)(mu Lap u + (mu+lam) grad div u)
    d/dt z = -gamma div u - u.grad z - gamma z div u,

with f(a) = -a/(1+a), and the Mach-scaled variant in velocity form, obtained
from the conservative momentum equation by expanding the material derivative
and dividing by 1 + eps*a:

    d/dt a = -div u / eps - div(a u)
    d/dt u = mub Lap u + (mub+lamb) grad div u - grad z / eps
             - u.grad u - (a/(1+eps a)) grad z
             + eps f_eps(a) (mub Lap u + (mub+lamb) grad div u)
    d/dt z = -gamma div u / eps - u.grad z - gamma z div u,

where f_eps(a) = -a/(1+eps a) equals f(eps a)/eps.  Every pointwise product
is dealiased by the 2/3 rule unless disabled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ConfigurationError, InsufficientDataError, RecoveryError, VacuumError
from .littlewood_paley import BesovSpec, DyadicFilterBank, build_filter_bank
from .spectral import Grid, SpectralField, divergence, gradient

DELTA_VAC_DEFAULT = 1e-3


@dataclass(frozen=True)
class FluidParams:
    """Viscosities, adiabatic exponent, pressure constant, Mach number."""

    mu: float
    lam: float
    gamma: float = 1.4
    A: float = 1.0
    eps: float = 1.0
    delta_vac: float = DELTA_VAC_DEFAULT

    def __post_init__(self):
        if not self.mu > 0:
            raise ConfigurationError("mu must be positive")
        if not 2 * self.mu + self.lam > 0:
            raise ConfigurationError("need 2*mu + lambda > 0")
        if not self.gamma > 1:
            raise ConfigurationError("gamma must exceed 1")
        if not self.A > 0:
            raise ConfigurationError("pressure constant A must be positive")
        if not 0 < self.eps <= 1:
            raise ConfigurationError("Mach number eps must lie in (0, 1]")


@dataclass
class NstState:
    """Triple (a, u, z) on a grid at time t."""

    a: SpectralField
    u: SpectralField
    z: SpectralField
    t: float = 0.0

    def __post_init__(self):
        g = self.grid
        if self.a.ncomp != 1 or self.z.ncomp != 1 or self.u.ncomp != g.d:
            raise ConfigurationError("state needs scalar a, z and a d-component u")

    @property
    def grid(self) -> Grid:
        return self.a.grid

    def copy(self):
        return NstState(self.a.copy(), self.u.copy(), self.z.copy(), self.t)

    def check_vacuum(self, delta_vac=DELTA_VAC_DEFAULT, eps=1.0):
        """Raise VacuumError when 1 + eps*a dips below delta_vac."""
        dens = 1.0 + eps * self.a.physical()
        if dens.min() < delta_vac:
            loc = np.unravel_index(np.argmin(dens), dens.shape)
            raise VacuumError(
                f"density floor violated: 1 + eps*a = {dens.min():.3e} at grid index {loc}",
                location=tuple(int(i) for i in loc),
                value=float(dens.min()),
            )


class Tendency(NamedTuple):
    a: SpectralField
    u: SpectralField
    z: SpectralField


def f_of_a(a: SpectralField, delta_vac=DELTA_VAC_DEFAULT) -> SpectralField:
    """Pointwise f(a) = -a/(1+a); errors when 1+a < delta_vac somewhere."""
    vals = a.physical()
    dens = 1.0 + vals
    if dens.min() < delta_vac:
        loc = np.unravel_index(np.argmin(dens), dens.shape)
        raise VacuumError(
            f"f(a) near vacuum: 1 + a = {dens.min():.3e} at grid index {loc}",
            location=tuple(int(i) for i in loc),
            value=float(dens.min()),
        )
    return SpectralField.from_physical(a.grid, -vals / dens)


def _to_field(grid, values, dealias):
    f = SpectralField.from_physical(grid, values)
    if dealias:
        f.dealias()
    return f


def _viscous(u: SpectralField, mu, lam):
    """mu Lap u + (mu+lam) grad div u as a spectral field."""
    g = u.grid
    kdotu = np.zeros(g.spectral_shape, dtype=complex)
    for i, k in enumerate(g.k_axes):
        kdotu += k * u.coeff[i]
    out = np.empty_like(u.coeff)
    for i, k in enumerate(g.k_axes):
        out[i] = -mu * g.k2 * u.coeff[i] - (mu + lam) * k * kdotu
    return SpectralField(g, out)


def _grad_phys(f: SpectralField):
    return gradient(f).physical()


def _advect(u_phys, grads):
    """(u . grad) applied to the stacked component gradients."""
    return np.einsum("j...,ij...->i...", u_phys, grads)


def rhs_unscaled(state: NstState, p: FluidParams, dealias=True) -> Tendency:
    """Tendency of the unscaled system (pointwise products dealiased)."""
    g = state.grid
    a_p = state.a.physical()
    z_p = state.z.physical()
    u_p = state.u.physical()

    dens = 1.0 + a_p
    if dens.min() < p.delta_vac:
        loc = np.unravel_index(np.argmin(dens), dens.shape)
        raise VacuumError(
            f"vacuum approached: 1 + a = {dens.min():.3e} at grid index {loc}",
            location=tuple(int(i) for i in loc),
            value=float(dens.min()),
        )
    fa = -a_p / dens

    divu = divergence(state.u)
    divu_p = divu.physical()
    gz = gradient(state.z)
    gz_p = gz.physical()
    visc = _viscous(state.u, p.mu, p.lam)
    visc_p = visc.physical()
    gu_p = np.stack([_grad_phys(state.u.component(i)) for i in range(g.d)])

    da = -1.0 * divu - divergence(_to_field(g, a_p * u_p, dealias))
    du_nl = (
        -_advect(u_p, gu_p)                      # u . grad u
        - fa * gz_p                              # f(a) grad z
        + fa * visc_p                            # f(a) viscous terms
    )
    du = visc - gz + _to_field(g, du_nl, dealias)
    dz_nl = -np.einsum("j...,j...->...", u_p, gz_p) - p.gamma * z_p * divu_p
    dz = -p.gamma * divu + _to_field(g, dz_nl, dealias)
    return Tendency(da, du, dz)


def rhs_scaled(state: NstState, p: FluidParams, eps=None, dealias=True) -> Tendency:
    """Tendency of the Mach-scaled system in velocity form."""
    g = state.grid
    eps = p.eps if eps is None else eps
    if not eps > 0:
        raise ConfigurationError(f"Mach number must be positive, got {eps}")
    a_p = state.a.physical()
    z_p = state.z.physical()
    u_p = state.u.physical()

    dens = 1.0 + eps * a_p
    if dens.min() < p.delta_vac:
        loc = np.unravel_index(np.argmin(dens), dens.shape)
        raise VacuumError(
            f"vacuum approached: 1 + eps*a = {dens.min():.3e} at grid index {loc}",
            location=tuple(int(i) for i in loc),
            value=float(dens.min()),
        )
    fa_over_eps = -a_p / dens                    # f(eps a)/eps
    fa_eps = eps * fa_over_eps                   # f(eps a)

    divu = divergence(state.u)
    divu_p = divu.physical()
    gz = gradient(state.z)
    gz_p = gz.physical()
    visc = _viscous(state.u, p.mu, p.lam)
    visc_p = visc.physical()
    gu_p = np.stack([_grad_phys(state.u.component(i)) for i in range(g.d)])

    da = (-1.0 / eps) * divu - divergence(_to_field(g, a_p * u_p, dealias))
    du_nl = -_advect(u_p, gu_p) - fa_over_eps * gz_p + fa_eps * visc_p
    du = visc - (1.0 / eps) * gz + _to_field(g, du_nl, dealias)
    dz_nl = -np.einsum("j...,j...->...", u_p, gz_p) - p.gamma * z_p * divu_p
    dz = (-p.gamma / eps) * divu + _to_field(g, dz_nl, dealias)
    return Tendency(da, du, dz)


def nonlinear_remainder(state: NstState, p: FluidParams, eps=None, dealias=True) -> Tendency:
    """Tendency minus the constant-coefficient linear part.

    This is the piece the split-step integrator treats explicitly; the
    removed linear part (viscosity, grad z / eps, div u / eps) is exactly
    what the per-mode propagator integrates.
    """
    g = state.grid
    eps = p.eps if eps is None else eps
    a_p = state.a.physical()
    z_p = state.z.physical()
    u_p = state.u.physical()

    dens = 1.0 + eps * a_p
    if dens.min() < p.delta_vac:
        loc = np.unravel_index(np.argmin(dens), dens.shape)
        raise VacuumError(
            f"vacuum approached: 1 + eps*a = {dens.min():.3e} at grid index {loc}",
            location=tuple(int(i) for i in loc),
            value=float(dens.min()),
        )
    fa_over_eps = -a_p / dens
    fa_eps = eps * fa_over_eps

    divu_p = divergence(state.u).physical()
    gz_p = gradient(state.z).physical()
    visc_p = _viscous(state.u, p.mu, p.lam).physical()
    gu_p = np.stack([_grad_phys(state.u.component(i)) for i in range(g.d)])

    da = -1.0 * divergence(_to_field(g, a_p * u_p, dealias))
    du = _to_field(g, -_advect(u_p, gu_p) - fa_over_eps * gz_p + fa_eps * visc_p, dealias)
    dz = _to_field(
        g,
        -np.einsum("j...,j...->...", u_p, gz_p) - p.gamma * z_p * divu_p,
        dealias,
    )
    return Tendency(da, du, dz)


def nonlinear_remainder_unscaled(state: NstState, p: FluidParams, dealias=True) -> Tendency:
    """Nonlinear terms of the unscaled system, written without any Mach
    variables; used as an independent path for the eps = 1 cross-check."""
    g = state.grid
    a_p = state.a.physical()
    z_p = state.z.physical()
    u_p = state.u.physical()
    dens = 1.0 + a_p
    if dens.min() < p.delta_vac:
        loc = np.unravel_index(np.argmin(dens), dens.shape)
        raise VacuumError(
            f"vacuum approached: 1 + a = {dens.min():.3e} at grid index {loc}",
            location=tuple(int(i) for i in loc),
            value=float(dens.min()),
        )
    fa = -a_p / dens
    divu_p = divergence(state.u).physical()
    gz_p = gradient(state.z).physical()
    visc_p = _viscous(state.u, p.mu, p.lam).physical()
    gu_p = np.stack([_grad_phys(state.u.component(i)) for i in range(g.d)])
    da = -1.0 * divergence(_to_field(g, a_p * u_p, dealias))
    du = _to_field(g, -_advect(u_p, gu_p) - fa * gz_p + fa * visc_p, dealias)
    dz = _to_field(
        g, -np.einsum("j...,j...->...", u_p, gz_p) - p.gamma * z_p * divu_p, dealias
    )
    return Tendency(da, du, dz)


def omega(state: NstState, gamma) -> SpectralField:
    """Derived transported mode gamma*a - z."""
    return gamma * state.a - state.z


def omega_rhs(state: NstState, p: FluidParams, w: SpectralField | None = None, dealias=True) -> SpectralField:
    """Tendency -u.grad w - w div u + (gamma-1) z div u of the derived mode."""
    g = state.grid
    if w is None:
        w = omega(state, p.gamma)
    u_p = state.u.physical()
    z_p = state.z.physical()
    divu_p = divergence(state.u).physical()
    gw_p = gradient(w).physical()
    w_p = w.physical()
    vals = (
        -np.einsum("j...,j...->...", u_p, gw_p)
        - w_p * divu_p
        + (p.gamma - 1.0) * z_p * divu_p
    )
    return _to_field(g, vals, dealias)


def recover_physical(state: NstState, p: FluidParams):
    """(rho, P, theta) from the perturbation variables.

    rho = 1 + a, P = 1 + z, theta = (P/A)^(1/gamma) / rho; the pressure law
    P = A (rho theta)^gamma then holds by construction.
    """
    rho = 1.0 + state.a.physical()
    if rho.min() < p.delta_vac:
        loc = np.unravel_index(np.argmin(rho), rho.shape)
        raise VacuumError(
            f"recovery near vacuum: rho = {rho.min():.3e} at grid index {loc}",
            location=tuple(int(i) for i in loc),
            value=float(rho.min()),
        )
    P = 1.0 + state.z.physical()
    if P.min() <= 0:
        raise RecoveryError(f"nonpositive pressure {P.min():.3e} during recovery")
    theta = (P / p.A) ** (1.0 / p.gamma) / rho
    return rho, P, theta


# ----------------------------------------------------------------------
# Diagnostic functionals over a sampled trajectory
# ----------------------------------------------------------------------

def energy_functionals(times, states, bank: DyadicFilterBank | None = None):
    """Evaluate the four run-time functionals on a sampled trajectory.

    Returns a dict with keys 'X0', 'X', 'D', 'E':
      X0  instantaneous norm of the data at the first sample,
      D   L1-in-time dissipation norm of (u, z),
      X   mixed-time energy at the critical level,
      E   full mixed-time energy including the dissipation terms.
    Mixed sup-in-time norms are Chemin-Lerner style (per-block time sup);
    time integrals use the trapezoid rule on the sample instants.
    """
    if len(states) == 0:
        raise InsufficientDataError("energy functionals need at least one snapshot")
    times = np.asarray(times, dtype=float)
    g = states[0].grid
    if bank is None:
        bank = build_filter_bank(g)
    d2 = g.d / 2.0

    a_s = [s.a for s in states]
    u_s = [s.u for s in states]
    z_s = [s.z for s in states]

    def inst_inter(f, s_lo, s_hi):
        return bank.intersection_norm(f, s_lo, s_hi)

    x0 = (
        inst_inter(a_s[0], d2 - 1, d2)
        + inst_inter(z_s[0], d2 - 1, d2)
        + bank.besov_norm(u_s[0], BesovSpec(d2 - 1))
    )

    if len(states) == 1:
        u_l1 = 0.0
        z_l1_sum = 0.0
    else:
        u_inst = np.array([bank.besov_norm(f, BesovSpec(d2 + 1)) for f in u_s])
        z_inst = np.array([bank.sum_space_norm(f, d2 + 1, d2) for f in z_s])
        u_l1 = float(np.trapezoid(u_inst, times))
        z_l1_sum = float(np.trapezoid(z_inst, times))
    dissipation = u_l1 + z_l1_sum

    cl = bank.chemin_lerner_norm
    cl_inter = bank.chemin_lerner_intersection
    az_crit = cl(times, a_s, math.inf, BesovSpec(d2)) + cl(times, z_s, math.inf, BesovSpec(d2))
    u_crit = cl(times, u_s, math.inf, BesovSpec(d2 - 1))
    x_t = az_crit + u_crit + u_l1

    az_full = cl_inter(times, a_s, math.inf, d2 - 1, d2) + cl_inter(
        times, z_s, math.inf, d2 - 1, d2
    )
    e_t = az_full + u_crit + u_l1 + z_l1_sum

    return {"X0": x0, "X": x_t, "D": dissipation, "E": e_t}
