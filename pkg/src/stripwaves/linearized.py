"""Linearization about an admissible reference state, its trigonalized
form, symmetrizer-based energy functionals, and a linear evolution
harness for the large-time energy estimate.

Everything here works in the standard long-wave regime.  The linearized
spatial operator is the derivative of the nonlinear right-hand side at
the reference (the finite-difference consistency test is the single
check that pins every coefficient); the change of unknown
V = (zeta, psi - eps*Z*zeta) upper-triangularizes its principal symbol
and absorbs the commutator terms into the zeroth-order coefficient
a = 1 + eps*(eps*v.grad Z + dt Z).
"""

from dataclasses import dataclass

import numpy as np

from .dn import capillary_laplacian, dn_apply, dn_shape_derivative, \
    surface_metric, surface_velocity
from .errors import NegativeEnergy, StepRejected
from .fields import SurfaceField
from .spectral import (inner, l2_norm, poisson_weight, scaled_divergence,
                       scaled_gradient, sobolev_norm)


@dataclass
class ReferenceState:
    """Reference surface/potential pair with cached derived coefficients."""

    zeta: SurfaceField
    psi: SurfaceField
    dt_zeta: SurfaceField
    dt_psi: SurfaceField
    Z: SurfaceField              # vertical surface velocity
    v1: SurfaceField             # horizontal surface velocity (scaled)
    v2: SurfaceField
    dt_Z: SurfaceField
    a_coeff: SurfaceField        # 1 + eps (eps v.grad Z + dt Z)
    rho: SurfaceField
    ctx: object                  # DN context at the reference surface
    params: object
    grid: object

    # -- the surface-tension linearization as an operator closure --------

    def _tension_flux(self, h_vals):
        p = self.params
        g = self.grid
        hx, hy = scaled_gradient(SurfaceField(h_vals, g), p)
        zx, zy = scaled_gradient(self.zeta, p)
        rho = self.rho.values
        rc = p.rho_coeff
        dot = zx.values * hx.values + zy.values * hy.values
        w1 = hx.values / rho - rc * zx.values * dot / rho ** 3
        w2 = hy.values / rho - rc * zy.values * dot / rho ** 3
        return hx, hy, w1, w2

    def apply_A(self, h):
        """A h = div^gamma [ grad h / rho - rc grad zeta (grad zeta . grad h)
        / rho^3 ]; at a rest reference this is the scaled Laplacian."""
        g = self.grid
        _, _, w1, w2 = self._tension_flux(h.values)
        return scaled_divergence(SurfaceField(w1, g), SurfaceField(w2, g),
                                 self.params)

    def tension_quadratic(self, h):
        """(h, -A h) = int (B grad h).grad h >= 0 (B is positive definite
        for any admissible surface)."""
        hx, hy, w1, w2 = self._tension_flux(h.values)
        dens = w1 * hx.values + w2 * hy.values
        return float(np.sum(dens) * self.grid.cell_area)


def build_reference(zeta_u, psi_u, model, dt_pair=None):
    """Assemble an admissible reference state and its coefficients.

    When ``dt_pair`` is omitted the time derivatives come from the
    nonlinear right-hand side (the reference is then a snapshot of a
    solution); synthetic references supply their own pair.  dt Z follows
    by the chain rule through the shape derivative of the DN operator.
    """
    p = model.params
    if not p.is_standard:
        raise ValueError("linearized machinery assumes the standard regime")
    g = model.grid
    from .evolution import SurfaceState
    state = SurfaceState(zeta_u, psi_u)
    if dt_pair is None:
        dt_pair = model.rhs(state)
    dt_zeta, dt_psi = dt_pair

    ctx = model.factory.context(zeta_u)
    eps = p.epsilon
    g_psi = dn_apply(ctx, psi_u)
    Z, v1, v2 = surface_velocity(ctx, psi_u, g_psi)
    rho = ctx.rho

    # dt of G psi: G dt_psi + (dG . dt_zeta) psi
    g_dtpsi = dn_apply(ctx, dt_psi)
    dG = dn_shape_derivative(ctx, psi_u, dt_zeta, g_psi)
    zx, zy = scaled_gradient(zeta_u, p)
    px, py = scaled_gradient(psi_u, p)
    dzx, dzy = scaled_gradient(dt_zeta, p)
    dpx, dpy = scaled_gradient(dt_psi, p)
    rho2 = rho.values ** 2
    em = eps * p.mu                      # = eps^2 in this regime
    num_t = (g_dtpsi.values + dG.values
             + em * (dzx.values * px.values + dzy.values * py.values
                     + zx.values * dpx.values + zy.values * dpy.values))
    drho2_t = 2.0 * p.rho_coeff * (zx.values * dzx.values
                                   + zy.values * dzy.values)
    dt_Z_vals = num_t / rho2 - Z.values * drho2_t / rho2
    dt_Z = SurfaceField(dt_Z_vals, g)

    adv = v1.values * scaled_gradient(Z, p)[0].values \
        + v2.values * scaled_gradient(Z, p)[1].values
    a_vals = 1.0 + eps * (eps * adv + dt_Z_vals)
    return ReferenceState(zeta_u, psi_u, dt_zeta, dt_psi, Z, v1, v2, dt_Z,
                          SurfaceField(a_vals, g), rho, ctx, p, g)


def verify_reference(ref, model):
    """Recompute every derived coefficient from scratch and return the
    worst pointwise deviation (the recomputation oracle)."""
    fresh = build_reference(ref.zeta, ref.psi, model,
                            dt_pair=(ref.dt_zeta, ref.dt_psi))
    devs = [np.max(np.abs(getattr(fresh, n).values - getattr(ref, n).values))
            for n in ("Z", "v1", "v2", "dt_Z", "a_coeff", "rho")]
    identity = np.max(np.abs(
        ref.a_coeff.values - 1.0
        - ref.params.epsilon * (ref.params.epsilon * (
            ref.v1.values * scaled_gradient(ref.Z, ref.params)[0].values
            + ref.v2.values * scaled_gradient(ref.Z, ref.params)[1].values)
            + ref.dt_Z.values)))
    return max(max(devs), float(identity))


# ---------------------------------------------------------------------------
# linearized operators (spatial parts; the systems read dt U + L U = rhs)
# ---------------------------------------------------------------------------


def apply_L(ref, d_zeta, d_psi):
    """Spatial part of the linearized operator at the reference:

    row 1:  G(zeta Z) + eps div(zeta v) - (1/eps) G psi
    row 2:  eps Z G(zeta Z) + (1 + eps^2 Z div v) zeta - alpha eps A zeta
            + eps v . grad psi - Z G psi
    """
    p = ref.params
    g = ref.grid
    eps = p.epsilon
    hZ = SurfaceField(d_zeta.values * ref.Z.values, g)
    G_hZ = dn_apply(ref.ctx, hZ)
    G_psi = dn_apply(ref.ctx, d_psi)
    div_hv = scaled_divergence(
        SurfaceField(d_zeta.values * ref.v1.values, g),
        SurfaceField(d_zeta.values * ref.v2.values, g), p)
    row1 = G_hZ.values + eps * div_hv.values - G_psi.values / eps

    div_v = scaled_divergence(ref.v1, ref.v2, p)
    px, py = scaled_gradient(d_psi, p)
    adv_psi = ref.v1.values * px.values + ref.v2.values * py.values
    A_zeta = ref.apply_A(d_zeta)
    row2 = (eps * ref.Z.values * G_hZ.values
            + (1.0 + eps ** 2 * ref.Z.values * div_v.values) * d_zeta.values
            - p.alpha * eps * A_zeta.values
            + eps * adv_psi
            - ref.Z.values * G_psi.values)
    return SurfaceField(row1, g), SurfaceField(row2, g)


def apply_M(ref, V1, V2):
    """Spatial part of the trigonalized operator on V = (zeta,
    psi - eps Z zeta):

    row 1:  eps div(V1 v) - (1/eps) G V2
    row 2:  (a - alpha eps A) V1 + eps v . grad V2
    """
    p = ref.params
    g = ref.grid
    eps = p.epsilon
    div_v1v = scaled_divergence(SurfaceField(V1.values * ref.v1.values, g),
                                SurfaceField(V1.values * ref.v2.values, g), p)
    G_V2 = dn_apply(ref.ctx, V2)
    row1 = eps * div_v1v.values - G_V2.values / eps

    vx, vy = scaled_gradient(V2, p)
    adv = ref.v1.values * vx.values + ref.v2.values * vy.values
    A_V1 = ref.apply_A(V1)
    row2 = ((ref.a_coeff.values * V1.values)
            - p.alpha * eps * A_V1.values
            + eps * adv)
    return SurfaceField(row1, g), SurfaceField(row2, g)


def trigonalize(ref, d_zeta, d_psi):
    """Change of unknown V = (zeta, psi - eps Z zeta)."""
    g = ref.grid
    V2 = SurfaceField(d_psi.values
                      - ref.params.epsilon * ref.Z.values * d_zeta.values, g)
    return d_zeta.copy(), V2


# ---------------------------------------------------------------------------
# energy functionals
# ---------------------------------------------------------------------------


def _lambda_power(field, k):
    g = field.grid
    w = (1.0 + g.KX ** 2 + g.KY ** 2) ** (k / 2.0)
    return SurfaceField(np.fft.ifft2(w * np.fft.fft2(field.values)).real, g)


def _energy_guard(name, value, tol=1e-9):
    if value < -tol * max(abs(value), 1.0):
        raise NegativeEnergy(f"{name} quadratic form = {value:.3e} < 0")
    return max(value, 0.0)


def energy(ref, V1, V2, k=1, tier="combined"):
    """Symmetrizer energies of the trigonalized system.

    low tier:   (L^k V1, (1 - a eps A) L^k V1) + (L^k V2, (1/eps) G L^k V2)
                + eps^2 |L^{k-1} V2|^2            (L = isotropic Bessel)
    high tier:  (d^k r^-1 V1, r (1 - a eps A) r d^k r^-1 V1)
                + (d^k V2, (1/eps) G d^k V2)      (d = capillary operator,
                                                   r = surface metric)
    combined:   sqrt(low^2 + high^2)
    comparison: the explicit-norm equivalent (sqrt of E_l^2 + E_h^2).
    """
    p = ref.params
    eps, alpha = p.epsilon, p.alpha
    g = ref.grid

    def low_sq():
        w1 = _lambda_power(V1, k)
        t1 = inner(w1, w1) + alpha * eps * ref.tension_quadratic(w1)
        w2 = _lambda_power(V2, k)
        t2 = inner(w2, dn_apply(ref.ctx, w2)) / eps
        w3 = _lambda_power(V2, k - 1)
        t3 = eps ** 2 * inner(w3, w3)
        return (_energy_guard("low V1", t1) + _energy_guard("low V2", t2)
                + t3)

    def high_sq():
        r = ref.rho.values
        u1 = capillary_laplacian(ref.zeta, SurfaceField(V1.values / r, g),
                                 p, power=k)
        ru1 = SurfaceField(r * u1.values, g)
        t1 = inner(ru1, ru1) + alpha * eps * ref.tension_quadratic(ru1)
        u2 = capillary_laplacian(ref.zeta, V2, p, power=k)
        t2 = inner(u2, dn_apply(ref.ctx, u2)) / eps
        return _energy_guard("high V1", t1) + _energy_guard("high V2", t2)

    if tier == "low":
        return float(np.sqrt(low_sq()))
    if tier == "high":
        return float(np.sqrt(high_sq()))
    if tier == "combined":
        return float(np.sqrt(low_sq() + high_sq()))
    if tier == "comparison":
        el_sq = (eps * (sobolev_norm(scaled_gradient(V1, p)[0], k, "h", p) ** 2
                        + sobolev_norm(scaled_gradient(V1, p)[1], k, "h", p) ** 2)
                 + sobolev_norm(V1, k, "h", p) ** 2
                 + sobolev_norm(V2, k, "p_heps", p) ** 2
                 + eps ** 2 * sobolev_norm(V2, k - 1, "h", p) ** 2)
        eh_sq = (eps * sobolev_norm(V1, 2 * k + 1, "h_eps", p) ** 2
                 + sobolev_norm(V1, 2 * k, "h_eps", p) ** 2
                 + sobolev_norm(V2, 2 * k, "p_heps", p) ** 2)
        return float(np.sqrt(el_sq + eh_sq))
    raise ValueError(f"unknown energy tier {tier!r}")


# ---------------------------------------------------------------------------
# linear evolution harness
# ---------------------------------------------------------------------------


class ReferenceTrajectory:
    """Piecewise-linear-in-time family of reference states.

    A single snapshot freezes the reference.  Interpolation acts on the
    cached coefficient fields; the DN context is rebuilt from the
    interpolated surface (and memoized per query time).
    """

    def __init__(self, snapshots, model=None):
        if isinstance(snapshots, ReferenceState):
            snapshots = [(0.0, snapshots)]
        self.snapshots = sorted(snapshots, key=lambda p: p[0])
        self.model = model
        self._cache = {}

    def at(self, t):
        if len(self.snapshots) == 1:
            return self.snapshots[0][1]
        if t in self._cache:
            return self._cache[t]
        times = [s[0] for s in self.snapshots]
        i = int(np.clip(np.searchsorted(times, t) - 1, 0, len(times) - 2))
        t0, r0 = self.snapshots[i]
        t1, r1 = self.snapshots[i + 1]
        w = 0.0 if t1 == t0 else np.clip((t - t0) / (t1 - t0), 0.0, 1.0)

        def mix(a, b):
            return SurfaceField((1 - w) * a.values + w * b.values, a.grid)

        zeta = mix(r0.zeta, r1.zeta)
        ctx = self.model.factory.context(zeta)
        ref = ReferenceState(zeta, mix(r0.psi, r1.psi),
                             mix(r0.dt_zeta, r1.dt_zeta),
                             mix(r0.dt_psi, r1.dt_psi),
                             mix(r0.Z, r1.Z), mix(r0.v1, r1.v1),
                             mix(r0.v2, r1.v2), mix(r0.dt_Z, r1.dt_Z),
                             mix(r0.a_coeff, r1.a_coeff),
                             surface_metric(zeta, r0.params), ctx,
                             r0.params, r0.grid)
        if len(self._cache) > 8:
            self._cache.clear()
        self._cache[t] = ref
        return ref


def linear_integrate(ref_traj, V0, t_final, k=1, source=None, dt=None,
                     cfl=0.5, energy_every=1, jump_tol=10.0):
    """Advance dt V + M(t) V = eps * H with RK4, logging energies.

    ``source`` is None or a callable t -> (H1, H2).  Returns
    (V1, V2, rows, lambda_star) with rows of
    (t, E_low, E_high, E_comb, lambda_running); lambda_star is the largest
    observed d/dt log E_comb^2 divided by eps.
    """
    if isinstance(ref_traj, ReferenceState):
        ref_traj = ReferenceTrajectory(ref_traj)
    ref0 = ref_traj.at(0.0)
    p = ref0.params
    g = ref0.grid
    eps = p.epsilon

    if dt is None:
        ka = g.k_aniso(p.gamma)
        kmax = float(np.max(ka))
        lam = p.sqrt_mu * kmax
        om = np.sqrt((lam * np.tanh(lam) / p.mu)
                     * (1.0 + p.alpha * p.mu * kmax ** 2))
        dt = cfl * 2.8 / om

    def rhs(t, v1, v2):
        ref = ref_traj.at(t)
        m1, m2 = apply_M(ref, v1, v2)
        r1, r2 = -m1.values, -m2.values
        if source is not None:
            h1, h2 = source(t)
            r1 = r1 + eps * h1.values
            r2 = r2 + eps * h2.values
        return r1, r2

    V1, V2 = V0[0].copy(), V0[1].copy()
    t = 0.0
    rows = []
    lam_star = -np.inf
    prev_log = None

    def log_energy(tcur):
        nonlocal lam_star, prev_log
        ref = ref_traj.at(tcur)
        e_lo = energy(ref, V1, V2, k, "low")
        e_hi = energy(ref, V1, V2, k, "high")
        e_c = float(np.sqrt(e_lo ** 2 + e_hi ** 2))
        lam_run = 0.0
        if prev_log is not None and e_c > 0:
            t_prev, log_prev = prev_log
            if tcur > t_prev:
                lam_run = (2.0 * (np.log(e_c) - log_prev)
                           / (eps * (tcur - t_prev)))
                lam_star = max(lam_star, lam_run)
        if e_c > 0:
            prev_log = (tcur, np.log(e_c))
        rows.append((tcur, e_lo, e_hi, e_c, lam_run))
        return e_c

    e_prev = log_energy(0.0)
    n = 0
    while t < t_final - 1e-12:
        step = min(dt, t_final - t)
        a1, a2 = rhs(t, V1, V2)
        b1, b2 = rhs(t + step / 2,
                     SurfaceField(V1.values + step / 2 * a1, g),
                     SurfaceField(V2.values + step / 2 * a2, g))
        c1, c2 = rhs(t + step / 2,
                     SurfaceField(V1.values + step / 2 * b1, g),
                     SurfaceField(V2.values + step / 2 * b2, g))
        d1, d2 = rhs(t + step,
                     SurfaceField(V1.values + step * c1, g),
                     SurfaceField(V2.values + step * c2, g))
        V1 = SurfaceField(V1.values + step / 6 * (a1 + 2 * b1 + 2 * c1 + d1), g)
        V2 = SurfaceField(V2.values + step / 6 * (a2 + 2 * b2 + 2 * c2 + d2), g)
        t += step
        n += 1
        if n % energy_every == 0 or t >= t_final - 1e-12:
            e_now = log_energy(t)
            if e_prev > 0 and e_now > jump_tol * max(e_prev, 1e-300):
                raise StepRejected(
                    f"linear energy jumped x{e_now / e_prev:.2f} at t={t:.4f}")
            e_prev = e_now
    return V1, V2, rows, float(lam_star)
