"""Stiffness-aware time stepping for the compressible system.

The linear part (viscosity plus the possibly 1/eps-singular acoustic
coupling) is advanced exactly in Fourier space: the solenoidal velocity
takes the heat factor, the (m, z) pair takes the closed-form 2x2 propagator,
and the density row integrates -div u / eps through the time integral of
that propagator, which in closed form is

    a(t) = a0 + (G21(t)/gamma) m0 + ((G22(t) - 1)/gamma) z0.

The nonlinear remainder is advanced by Heun's method inside a Strang
composition (half linear, full nonlinear, half linear), so the scheme is
second order and the acoustic terms impose no step-size restriction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dynamics import FluidParams, NstState, Tendency, nonlinear_remainder, omega, omega_rhs
from .errors import CflError, ConfigurationError
from .greens import GreenParams, green_entries
from .spectral import SpectralField

_PROPAGATOR_CACHE_MAX = 8


@dataclass(frozen=True)
class IntegratorConfig:
    """Time-stepping controls.

    scheme: 'splitstep' (exact linear + Heun remainder, default) or
    'imex-euler' (first-order reference).  snapshot_every counts steps.
    """

    dt: float
    t_end: float
    scheme: str = "splitstep"
    cfl_safety: float = 0.4
    snapshot_every: int = 1
    dealias: bool = True
    linearized: bool = False
    dt_min: float = 1e-8

    def __post_init__(self):
        if not self.dt > 0:
            raise ConfigurationError("dt must be positive")
        if not self.t_end > 0:
            raise ConfigurationError("t_end must be positive")
        if self.scheme not in ("splitstep", "imex-euler"):
            raise ConfigurationError(f"unknown scheme {self.scheme!r}")
        if self.snapshot_every < 1:
            raise ConfigurationError("snapshot_every must be >= 1")


@dataclass
class TimeSeries:
    """Snapshots of a run with per-snapshot diagnostics."""

    times: list = field(default_factory=list)
    states: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)

    def append(self, t, state, diag):
        if self.times and t <= self.times[-1]:
            raise ConfigurationError("snapshot times must increase strictly")
        self.times.append(float(t))
        self.states.append(state)
        self.diagnostics.append(diag)

    def __len__(self):
        return len(self.times)


def linear_propagator(xi, dt, params: FluidParams, eps=None):
    """Exact per-mode matrix on (a, u_1..u_d, z) for one frequency xi.

    xi is a length-d frequency vector.  For xi = 0 the matrix is the
    identity.  Eigenvalue real parts are all <= 0, so the spectral radius
    never exceeds 1.
    """
    xi = np.asarray(xi, dtype=float)
    d = xi.size
    eps = params.eps if eps is None else eps
    n = d + 2
    k = float(np.linalg.norm(xi))
    if k == 0.0:
        return np.eye(n, dtype=complex)
    gp = GreenParams(mu=params.mu, lam=params.lam, gamma=params.gamma)
    g11, g12, g21, g22 = (float(x) for x in green_entries(dt, k, gp, eps))
    heat = float(np.exp(-params.mu * k**2 * dt))
    gamma = params.gamma

    M = np.zeros((n, n), dtype=complex)
    # density row: a' = a + (g21/gamma) m + ((g22-1)/gamma) z, with m = i xi.u / k
    M[0, 0] = 1.0
    for j in range(d):
        M[0, 1 + j] = (g21 / gamma) * 1j * xi[j] / k
    M[0, d + 1] = (g22 - 1.0) / gamma
    # velocity rows: solenoidal heat factor plus potential part from m' = g11 m + g12 z
    for i in range(d):
        for j in range(d):
            proj = xi[i] * xi[j] / k**2
            M[1 + i, 1 + j] = heat * ((1.0 if i == j else 0.0) - proj) + g11 * proj
        M[1 + i, d + 1] = (-1j * xi[i] / k) * g12
    # pressure row: z' = g21 m + g22 z
    for j in range(d):
        M[d + 1, 1 + j] = g21 * 1j * xi[j] / k
    M[d + 1, d + 1] = g22
    return M


class _LatticePropagator:
    """Vectorized exact linear step over the whole rfft lattice."""

    def __init__(self, grid, params: FluidParams, eps, dt):
        self.grid = grid
        self.dt = dt
        gp = GreenParams(mu=params.mu, lam=params.lam, gamma=params.gamma)
        k = grid.kmag
        self.g11, self.g12, self.g21, self.g22 = green_entries(dt, k, gp, eps)
        self.heat = np.exp(-params.mu * k**2 * dt)
        self.gamma = params.gamma
        with np.errstate(divide="ignore", invalid="ignore"):
            self.inv_k = np.where(k > 0, 1.0 / np.where(k > 0, k, 1.0), 0.0)

    def apply(self, state: NstState) -> NstState:
        g = self.grid
        a_c = state.a.coeff[0]
        z_c = state.z.coeff[0]
        u_c = state.u.coeff
        kdotu = np.zeros(g.spectral_shape, dtype=complex)
        for i, kax in enumerate(g.k_axes):
            kdotu += kax * u_c[i]
        m_c = 1j * kdotu * self.inv_k                      # m-hat, zero at k=0
        m_new = self.g11 * m_c + self.g12 * z_c
        z_new = self.g21 * m_c + self.g22 * z_c
        zero = (0,) * g.d
        z_new[zero] = z_c[zero]                            # identity at the zero mode
        a_new = a_c + (self.g21 / self.gamma) * m_c + ((self.g22 - 1.0) / self.gamma) * z_c
        a_new[zero] = a_c[zero]
        u_new = np.empty_like(u_c)
        for i, kax in enumerate(g.k_axes):
            sol = u_c[i] - kax * kdotu * self.inv_k**2
            u_new[i] = self.heat * sol + (-1j * kax * self.inv_k) * m_new
        zc = (slice(None),) + zero
        u_new[zc] = u_c[zc]
        return NstState(
            SpectralField(g, a_new[None]),
            SpectralField(g, u_new),
            SpectralField(g, z_new[None]),
            state.t,
        )


def _axpy(state: NstState, dt, tend: Tendency, t_new) -> NstState:
    return NstState(
        state.a + dt * tend.a,
        state.u + dt * tend.u,
        state.z + dt * tend.z,
        t_new,
    )


def _add_forcing(tend: Tendency, forcing, t) -> Tendency:
    if forcing is None:
        return tend
    f = forcing(t)
    return Tendency(tend.a + f.a, tend.u + f.u, tend.z + f.z)


class Integrator:
    """Split-step integrator bound to one (grid, params, eps) combination."""

    def __init__(
        self, params: FluidParams, config: IntegratorConfig, eps=None, forcing=None, remainder_fn=None
    ):
        self.params = params
        self.config = config
        self.eps = params.eps if eps is None else eps
        self.forcing = forcing
        self.remainder_fn = remainder_fn
        self._props = {}

    def _propagator(self, grid, dt):
        key = round(float(dt), 15)
        if key not in self._props:
            if len(self._props) > _PROPAGATOR_CACHE_MAX:
                self._props.clear()
            self._props[key] = _LatticePropagator(grid, self.params, self.eps, dt)
        return self._props[key]

    def _rhs_nl(self, state):
        if self.remainder_fn is not None:
            return self.remainder_fn(state, self.params, dealias=self.config.dealias)
        return nonlinear_remainder(state, self.params, eps=self.eps, dealias=self.config.dealias)

    def _cfl_dt(self, state):
        u = state.u.physical()
        umax = float(np.sqrt(np.sum(u**2, axis=0)).max())
        if umax == 0.0:
            return np.inf
        return self.config.cfl_safety * state.grid.dx / umax

    def step(self, state: NstState, dt, w: SpectralField | None = None):
        """One step of size dt; returns (state, w) with w co-advanced if given."""
        cfg = self.config
        if cfg.scheme == "imex-euler":
            return self._step_imex(state, dt, w)
        t0 = state.t
        half = self._propagator(state.grid, 0.5 * dt)
        s = half.apply(state)
        if not cfg.linearized:
            k1 = _add_forcing(self._rhs_nl(s), self.forcing, t0)
            if w is not None:
                k1w = omega_rhs(s, self.params, w, dealias=cfg.dealias)
                w_mid = w + dt * k1w
            s_mid = _axpy(s, dt, k1, t0 + dt)
            k2 = _add_forcing(self._rhs_nl(s_mid), self.forcing, t0 + dt)
            if w is not None:
                k2w = omega_rhs(s_mid, self.params, w_mid, dealias=cfg.dealias)
                w = w + (0.5 * dt) * (k1w + k2w)
            s = _axpy(s, 0.5 * dt, Tendency(k1.a + k2.a, k1.u + k2.u, k1.z + k2.z), t0)
        s = half.apply(s)
        return NstState(s.a, s.u, s.z, t0 + dt), w

    def _step_imex(self, state: NstState, dt, w):
        """First-order IMEX Euler reference: implicit linear, explicit rest."""
        g = state.grid
        p, eps = self.params, self.eps
        tend = _add_forcing(self._rhs_nl(state), self.forcing, state.t)
        rhs_a = state.a + dt * tend.a
        rhs_u = state.u + dt * tend.u
        rhs_z = state.z + dt * tend.z
        if w is not None:
            w = w + dt * omega_rhs(state, p, w, dealias=self.config.dealias)
        k = g.kmag
        kdotu = np.zeros(g.spectral_shape, dtype=complex)
        for i, kax in enumerate(g.k_axes):
            kdotu += kax * rhs_u.coeff[i]
        with np.errstate(divide="ignore", invalid="ignore"):
            inv_k = np.where(k > 0, 1.0 / np.where(k > 0, k, 1.0), 0.0)
        m_c = 1j * kdotu * inv_k
        z_c = rhs_z.coeff[0]
        # solve (I - dt A) (m', z') = (m, z) with A = [[-2q k^2, k/eps], [-gamma k/eps, 0]]
        a11 = 1.0 + dt * (2 * p.mu + p.lam) * k**2
        a12 = -dt * k / eps
        a21 = dt * p.gamma * k / eps
        a22 = np.ones_like(k)
        det = a11 * a22 - a12 * a21
        m_new = (a22 * m_c - a12 * z_c) / det
        z_new = (-a21 * m_c + a11 * z_c) / det
        a_new = rhs_a.coeff[0] - dt * (k / eps) * m_new
        heat = 1.0 / (1.0 + dt * p.mu * k**2)
        u_new = np.empty_like(rhs_u.coeff)
        for i, kax in enumerate(g.k_axes):
            sol = rhs_u.coeff[i] - kax * kdotu * inv_k**2
            u_new[i] = heat * sol + (-1j * kax * inv_k) * m_new
        zero = (0,) * g.d
        u_new[(slice(None),) + zero] = rhs_u.coeff[(slice(None),) + zero]
        z_new[zero] = z_c[zero]
        a_new[zero] = rhs_a.coeff[0][zero]
        s = NstState(
            SpectralField(g, a_new[None]),
            SpectralField(g, u_new),
            SpectralField(g, z_new[None]),
            state.t + dt,
        )
        return s, w

    def integrate(self, state0: NstState, callbacks=(), track_omega=False) -> TimeSeries:
        """March to t_end, snapshotting every snapshot_every steps.

        The advective CFL is checked every step; a violated step is split
        into 2^m equal substeps, and the run aborts with CflError if the
        required substep falls below dt_min.  Vacuum errors propagate after
        the last valid snapshot is recorded.
        """
        cfg = self.config
        series = TimeSeries()
        state = state0.copy()
        w = omega(state, self.params.gamma) if track_omega else None
        self._snapshot(series, state, w, callbacks)
        n_steps = int(round(cfg.t_end / cfg.dt))
        if abs(n_steps * cfg.dt - cfg.t_end) > 1e-9 * cfg.t_end:
            n_steps = int(np.ceil(cfg.t_end / cfg.dt))
        for istep in range(n_steps):
            dt = min(cfg.dt, cfg.t_end - istep * cfg.dt)
            if dt <= 0:
                break
            dt_cfl = self._cfl_dt(state)
            nsub = 1
            while dt / nsub > dt_cfl:
                nsub *= 2
                if dt / nsub < cfg.dt_min:
                    raise CflError(
                        f"advective CFL forces dt below dt_min = {cfg.dt_min:g} "
                        f"(needed {dt_cfl:g} at t = {state.t:g})"
                    )
            for _ in range(nsub):
                state, w = self.step(state, dt / nsub, w)
            if (istep + 1) % cfg.snapshot_every == 0 or istep == n_steps - 1:
                self._snapshot(series, state, w, callbacks)
        return series

    def _snapshot(self, series, state, w, callbacks):
        snap = state.copy()
        diag = {}
        ro = _readonly(snap)
        for cb in callbacks:
            out = cb(snap.t, ro)
            if out:
                diag.update(out)
        if w is not None:
            diag["omega"] = w.copy()
        series.append(snap.t, snap, diag)


def _readonly(state: NstState) -> NstState:
    def lock(f):
        c = f.coeff.view()
        c.flags.writeable = False
        g = SpectralField(f.grid, f.coeff)
        g.coeff = c
        return g

    return NstState(lock(state.a), lock(state.u), lock(state.z), state.t)


def integrate(
    state0, params, config, eps=None, forcing=None, callbacks=(), track_omega=False, remainder_fn=None
):
    """Convenience wrapper building an Integrator and running it."""
    it = Integrator(params, config, eps=eps, forcing=forcing, remainder_fn=remainder_fn)
    return it.integrate(state0, callbacks=callbacks, track_omega=track_omega)
