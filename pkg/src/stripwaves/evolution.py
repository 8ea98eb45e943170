"""Time evolution of the nondimensionalized free-surface systems.

Three variants of the same family are exposed: the standard long-wave
system, the degenerate near-critical-Bond system, and the general
(epsilon, mu, gamma) system.  Each variant's right-hand side is written
with its own displayed coefficient pattern; with the regime substitutions
they agree to roundoff, which the variant-consistency test pins down.

The time integrator is classical RK4 with the step chosen from the
stiffest retained linear frequency

    omega(k)^2 = (1/mu) sqrt(mu) k tanh(sqrt(mu) k) (1 + alpha mu k^2),

k = |xi^gamma|, against RK4's imaginary-axis stability limit 2*sqrt(2).
"""

from dataclasses import dataclass, field as dc_field, replace

import numpy as np

from .dn import DNFactory, dn_apply, surface_metric
from .errors import StepRejected
from .fields import SurfaceField
from .spectral import dealias, inner, l2_norm, scaled_divergence, scaled_gradient


@dataclass
class SurfaceState:
    """Evolution unknowns: elevation, potential trace, current time."""

    zeta: SurfaceField
    psi: SurfaceField
    t: float = 0.0

    def copy(self):
        return SurfaceState(self.zeta.copy(), self.psi.copy(), self.t)


@dataclass
class EvolutionConfig:
    variant: str = "standard"      # standard | degenerate | general
    cfl: float = 0.5
    dt: float = 0.0                # > 0 overrides the CFL choice
    dealias: bool = True
    h_floor: float = 0.1
    jump_tol: float = 0.1          # relative Hamiltonian jump per step
    monitor_every: int = 1
    tol_ell: float = 1e-10
    check_energy: bool = True

    def __post_init__(self):
        if self.variant not in ("standard", "degenerate", "general"):
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.h_floor <= 0:
            raise ValueError("h_floor must be positive")


class WaterWaveModel:
    """Bundles grid, regime, bottom and solver state for one simulation."""

    def __init__(self, grid, params, b=None, config=None):
        self.grid = grid
        self.params = params
        self.config = config if config is not None else EvolutionConfig()
        self.factory = DNFactory(grid, params, b=b, tol=self.config.tol_ell,
                                 h_floor=self.config.h_floor)
        self.b = self.factory.b
        self._h_memo = (None, 0.0)

    # -- right-hand sides ------------------------------------------------

    def _da(self, vals):
        if not self.config.dealias:
            return vals
        g = self.grid
        spec = np.fft.fft2(vals)
        spec[~g.dealias_mask()] = 0.0
        return np.fft.ifft2(spec).real

    def _gradients(self, state):
        p = self.params
        zx, zy = scaled_gradient(state.zeta, p)
        px, py = scaled_gradient(state.psi, p)
        return zx.values, zy.values, px.values, py.values

    def rhs(self, state):
        variant = self.config.variant
        if variant == "standard":
            return self._rhs_standard(state)
        if variant == "degenerate":
            return self._rhs_degenerate(state)
        return self._rhs_general(state)

    def _surface_tension_divergence(self, zx, zy, rho):
        """div^gamma of the dealiased quotient grad zeta / rho."""
        g = self.grid
        qx = SurfaceField(self._da(zx / rho), g)
        qy = SurfaceField(self._da(zy / rho), g)
        return scaled_divergence(qx, qy, self.params).values

    def _rhs_standard(self, state):
        p = self.params
        if not p.is_standard:
            raise ValueError("standard variant needs ScaleParams.standard")
        eps, alpha = p.epsilon, p.alpha
        g = self.grid
        ctx = self.factory.context(state.zeta)
        G = dn_apply(ctx, state.psi).values
        zx, zy, px, py = self._gradients(state)
        dzeta = G / eps

        kinetic = 0.5 * eps * self._da(px * px + py * py)
        slope_sq = self._da(zx * zx + zy * zy)
        rho2 = 1.0 + eps ** 3 * slope_sq
        num = dzeta + eps * self._da(zx * px + zy * py)
        quad = 0.5 * eps ** 2 * self._da(self._da(num * num) / rho2)
        rho = np.sqrt(1.0 + eps ** 3 * slope_sq)
        tension = alpha * eps * self._surface_tension_divergence(zx, zy, rho)
        dpsi = -state.zeta.values - kinetic + quad + tension
        return SurfaceField(dzeta, g), SurfaceField(dpsi, g)

    def _rhs_degenerate(self, state):
        p = self.params
        if not p.is_degenerate:
            raise ValueError("degenerate variant needs ScaleParams.degenerate")
        ed, alpha = p.mu, p.alpha          # the degenerate small parameter
        g = self.grid
        ctx = self.factory.context(state.zeta)
        G = dn_apply(ctx, state.psi).values
        zx, zy, px, py = self._gradients(state)
        dzeta = G / ed

        kinetic = 0.5 * ed ** 2 * self._da(px * px + py * py)
        slope_sq = self._da(zx * zx + zy * zy)
        rho2 = 1.0 + ed ** 5 * slope_sq
        num = dzeta + ed ** 2 * self._da(zx * px + zy * py)
        quad = 0.5 * ed ** 3 * self._da(self._da(num * num) / rho2)
        rho = np.sqrt(1.0 + ed ** 5 * slope_sq)
        tension = alpha * ed * self._surface_tension_divergence(zx, zy, rho)
        dpsi = -state.zeta.values - kinetic + quad + tension
        return SurfaceField(dzeta, g), SurfaceField(dpsi, g)

    def _rhs_general(self, state):
        p = self.params
        eps, mu, alpha = p.epsilon, p.mu, p.alpha
        g = self.grid
        ctx = self.factory.context(state.zeta)
        G = dn_apply(ctx, state.psi).values
        zx, zy, px, py = self._gradients(state)
        dzeta = G / mu

        kinetic = 0.5 * eps * self._da(px * px + py * py)
        slope_sq = self._da(zx * zx + zy * zy)
        rho2 = 1.0 + eps ** 2 * mu * slope_sq
        num = dzeta + eps * self._da(zx * px + zy * py)
        quad = 0.5 * eps * mu * self._da(self._da(num * num) / rho2)
        rho = np.sqrt(1.0 + eps ** 2 * mu * slope_sq)
        tension = alpha * mu * self._surface_tension_divergence(zx, zy, rho)
        dpsi = -state.zeta.values - kinetic + quad + tension
        return SurfaceField(dzeta, g), SurfaceField(dpsi, g)

    # -- energy ------------------------------------------------------------

    def hamiltonian(self, state):
        """Conserved energy of the flow:

            H = int 1/2 zeta^2 + 1/(2 mu) psi G psi
                + (alpha/eps^2) (rho - 1)  dx_h.

        Its variational derivatives reproduce the right-hand sides (the
        functional-derivative test pins this down), so drift measures
        integrator plus aliasing error only.
        """
        if self._h_memo[0] is state:
            return self._h_memo[1]
        p = self.params
        ctx = self.factory.context(state.zeta)
        G = dn_apply(ctx, state.psi)
        rho = surface_metric(state.zeta, p)
        dens = (0.5 * state.zeta.values ** 2
                + 0.5 / p.mu * state.psi.values * G.values
                + p.alpha / p.epsilon ** 2 * (rho.values - 1.0))
        h = float(np.sum(dens) * self.grid.cell_area)
        self._h_memo = (state, h)
        return h

    def mass(self, state):
        return float(np.sum(state.zeta.values) * self.grid.cell_area)

    # -- stepping ------------------------------------------------------------

    def max_linear_frequency(self):
        g, p = self.grid, self.params
        k = g.k_aniso(p.gamma)
        if self.config.dealias:
            k = k[g.dealias_mask()]
        kmax = float(np.max(k))
        lam = p.sqrt_mu * kmax
        om_sq = (lam * np.tanh(lam) / p.mu) * (1.0 + p.alpha * p.mu * kmax ** 2)
        return float(np.sqrt(om_sq))

    def stable_dt(self):
        if self.config.dt > 0:
            return self.config.dt
        return self.config.cfl * 2.8 / self.max_linear_frequency()

    def step(self, state, dt=None):
        """One RK4 step; re-checks admissibility and energy afterwards."""
        if dt is None:
            dt = self.stable_dt()
        cfg = self.config
        h_before = self.hamiltonian(state) if cfg.check_energy else None

        def f(s):
            return self.rhs(s)

        z0, p0 = state.zeta.values, state.psi.values
        g = self.grid

        k1z, k1p = f(state)
        s2 = SurfaceState(SurfaceField(z0 + 0.5 * dt * k1z.values, g),
                          SurfaceField(p0 + 0.5 * dt * k1p.values, g),
                          state.t + 0.5 * dt)
        k2z, k2p = f(s2)
        s3 = SurfaceState(SurfaceField(z0 + 0.5 * dt * k2z.values, g),
                          SurfaceField(p0 + 0.5 * dt * k2p.values, g),
                          state.t + 0.5 * dt)
        k3z, k3p = f(s3)
        s4 = SurfaceState(SurfaceField(z0 + dt * k3z.values, g),
                          SurfaceField(p0 + dt * k3p.values, g),
                          state.t + dt)
        k4z, k4p = f(s4)

        znew = z0 + dt / 6.0 * (k1z.values + 2 * k2z.values
                                + 2 * k3z.values + k4z.values)
        pnew = p0 + dt / 6.0 * (k1p.values + 2 * k2p.values
                                + 2 * k3p.values + k4p.values)
        new = SurfaceState(SurfaceField(znew, g), SurfaceField(pnew, g),
                           state.t + dt)
        # admissibility re-check (raises AdmissibilityViolation)
        self.factory.context(new.zeta)
        if cfg.check_energy:
            h_after = self.hamiltonian(new)
            scale = max(abs(h_before), abs(h_after), 1e-12)
            if abs(h_after - h_before) > cfg.jump_tol * scale:
                raise StepRejected(
                    f"Hamiltonian jumped {h_after - h_before:.3e} "
                    f"(relative {abs(h_after - h_before) / scale:.3e}) "
                    f"in one step at t={state.t:.4f}")
        return new

    def integrate(self, state0, t_final, callbacks=(), monitor=None):
        """Advance to t_final; returns (final state, monitor rows).

        ``monitor`` rows are (t, hamiltonian, mass, max|zeta|, h_min, dt);
        callbacks receive (state, row) at the configured cadence.  Partial
        rows are flushed (returned) when a step fails.
        """
        state = state0.copy()
        rows = []
        cfg = self.config
        n = 0

        def record(s, dt_used):
            ctx = self.factory.context(s.zeta)
            row = (s.t, self.hamiltonian(s), self.mass(s),
                   float(np.max(np.abs(s.zeta.values))), ctx.h_min, dt_used)
            rows.append(row)
            for cb in callbacks:
                cb(s, row)

        record(state, 0.0)
        try:
            while state.t < t_final - 1e-12:
                dt = min(self.stable_dt(), t_final - state.t)
                state = self.step(state, dt)
                n += 1
                if n % cfg.monitor_every == 0 or state.t >= t_final - 1e-12:
                    record(state, dt)
        except Exception:
            if monitor is not None:
                monitor(rows)
            raise
        if monitor is not None:
            monitor(rows)
        return state, rows


def linear_mode_frequency(params, k):
    """Dispersion relation of the rest-state linearization."""
    lam = params.sqrt_mu * k
    om_sq = (lam * np.tanh(lam) / params.mu) * (1.0 + params.alpha
                                                * params.mu * k ** 2)
    return float(np.sqrt(om_sq))


def measure_mode_frequency(model, mode=(1, 0), amplitude=1e-6,
                           steps_per_period=24, periods=1.0):
    """Measure the oscillation frequency of a tiny-amplitude mode by
    least-squares fit of the tracked spectral coefficient."""
    from scipy.optimize import curve_fit

    g, p = model.grid, model.params
    jx, jy = mode
    kvec = (2 * np.pi * jx / g.Lx, 2 * np.pi * jy / g.Ly)
    k = np.hypot(kvec[0], p.gamma * kvec[1])
    om0 = linear_mode_frequency(p, k)
    phase = np.cos(kvec[0] * g.X + kvec[1] * g.Y)
    state = SurfaceState(SurfaceField(amplitude * phase, g),
                         SurfaceField(np.zeros(g.hshape), g))
    period = 2 * np.pi / om0
    dt = period / steps_per_period
    nsteps = int(round(steps_per_period * periods))
    ts, cs = [0.0], [np.vdot(phase, state.zeta.values).real]
    for _ in range(nsteps):
        state = model.step(state, dt)
        ts.append(state.t)
        cs.append(np.vdot(phase, state.zeta.values).real)
    ts, cs = np.asarray(ts), np.asarray(cs)

    def osc(t, a, om, ph):
        return a * np.cos(om * t + ph)

    popt, _ = curve_fit(osc, ts, cs, p0=(cs[0], om0, 0.0))
    return abs(popt[1]), om0


def reflect_x(field):
    """x -> -x on the periodic grid."""
    vals = np.roll(field.values[::-1, :], 1, axis=0)
    return SurfaceField(vals, field.grid)
