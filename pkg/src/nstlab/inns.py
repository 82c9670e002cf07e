"""Reference solver for the incompressible inhomogeneous limit system.

The transported density perturbation rho and the divergence-free velocity v
obey

    d/dt rho = -div(rho v),
    d/dt v   = P(-v.grad v) + mub Lap v,

with P the Leray projector; the pressure gradient never appears because P
annihilates it.  Time stepping reuses the split-step idea: exact heat factor
for the linear part, Heun for the projected nonlinearity, projection
re-applied after every step.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .integrator import IntegratorConfig, TimeSeries
from .spectral import SpectralField, divergence, gradient, leray_project

DIV_FREE_TOL = 1e-10


@dataclass
class InnsState:
    """Density perturbation and solenoidal velocity at time t."""

    rho: SpectralField
    v: SpectralField
    t: float = 0.0
    mu_bar: float = 1.0

    def __post_init__(self):
        if self.rho.ncomp != 1 or self.v.ncomp != self.grid.d:
            raise ConfigurationError("state needs scalar rho and d-component v")
        if not self.mu_bar > 0:
            raise ConfigurationError("viscosity must be positive")

    @property
    def grid(self):
        return self.rho.grid

    def copy(self):
        return InnsState(self.rho.copy(), self.v.copy(), self.t, self.mu_bar)

    def div_v_norm(self):
        return divergence(self.v).l2_norm()


def project_velocity(state: InnsState) -> InnsState:
    pv, _ = leray_project(state.v)
    return InnsState(state.rho, pv, state.t, state.mu_bar)


def rhs_inns(state: InnsState, dealias=True):
    """(d rho/dt, d v/dt) with the pressure eliminated by projection."""
    g = state.grid
    rho_p = state.rho.physical()
    v_p = state.v.physical()
    gv_p = np.stack([gradient(state.v.component(i)).physical() for i in range(g.d)])
    adv = np.einsum("j...,ij...->i...", v_p, gv_p)
    adv_f = SpectralField.from_physical(g, -adv)
    if dealias:
        adv_f.dealias()
    dv_nl, _ = leray_project(adv_f)
    visc = SpectralField(g, -state.mu_bar * g.k2 * state.v.coeff)
    rho_v = SpectralField.from_physical(g, rho_p * v_p)
    if dealias:
        rho_v.dealias()
    drho = -1.0 * divergence(rho_v)
    return drho, dv_nl + visc


def _nonlinear(state: InnsState, dealias):
    g = state.grid
    rho_p = state.rho.physical()
    v_p = state.v.physical()
    gv_p = np.stack([gradient(state.v.component(i)).physical() for i in range(g.d)])
    adv = np.einsum("j...,ij...->i...", v_p, gv_p)
    adv_f = SpectralField.from_physical(g, -adv)
    if dealias:
        adv_f.dealias()
    dv, _ = leray_project(adv_f)
    rho_v = SpectralField.from_physical(g, rho_p * v_p)
    if dealias:
        rho_v.dealias()
    return -1.0 * divergence(rho_v), dv


def integrate_inns(state0: InnsState, config: IntegratorConfig, callbacks=()) -> TimeSeries:
    """March the limit system to t_end with the split-step scheme."""
    g = state0.grid
    state = project_velocity(state0.copy())
    series = TimeSeries()
    _snapshot(series, state, callbacks)
    n_steps = int(round(config.t_end / config.dt))
    if abs(n_steps * config.dt - config.t_end) > 1e-9 * config.t_end:
        n_steps = int(np.ceil(config.t_end / config.dt))
    heat_half = np.exp(-state.mu_bar * g.k2 * 0.5 * config.dt)
    for istep in range(n_steps):
        dt = min(config.dt, config.t_end - istep * config.dt)
        if dt <= 0:
            break
        if abs(dt - config.dt) < 1e-15 * config.dt:
            hh = heat_half
        else:
            hh = np.exp(-state.mu_bar * g.k2 * 0.5 * dt)
        v = SpectralField(g, hh * state.v.coeff)
        rho = state.rho
        if not config.linearized:
            s1 = InnsState(rho, v, state.t, state.mu_bar)
            k1r, k1v = _nonlinear(s1, config.dealias)
            s_mid = InnsState(rho + dt * k1r, v + dt * k1v, state.t + dt, state.mu_bar)
            k2r, k2v = _nonlinear(s_mid, config.dealias)
            rho = rho + (0.5 * dt) * (k1r + k2r)
            v = v + (0.5 * dt) * (k1v + k2v)
        v = SpectralField(g, hh * v.coeff)
        state = project_velocity(InnsState(rho, v, state.t + dt, state.mu_bar))
        if (istep + 1) % config.snapshot_every == 0 or istep == n_steps - 1:
            _snapshot(series, state, callbacks)
    return series


def _snapshot(series, state, callbacks):
    snap = state.copy()
    diag = {"div_v": snap.div_v_norm()}
    for cb in callbacks:
        out = cb(snap.t, snap)
        if out:
            diag.update(out)
    series.append(snap.t, snap, diag)
