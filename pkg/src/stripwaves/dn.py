"""The scaled Dirichlet-Neumann operator and its pseudo-differential
companions: principal part, residual, shape derivative, the second-order
surface operator from linearized capillarity, and commutator diagnostics.

The operator maps the surface trace psi of the velocity potential to the
conormal flux of its harmonic extension through the free surface:

    G psi = e3 . (I + Q) grad^s (psi^b) |_{z=0}

with psi^b the extension of :func:`stripwaves.elliptic.dirichlet_extension`.
With a flat surface it reduces to the multiplier
sqrt(mu)|xi^gamma| tanh(sqrt(mu)|xi^gamma|).
"""

from dataclasses import dataclass

import numpy as np

from .elliptic import (FlatStripEngine, StripSolver, StripTransform,
                       build_transform, scaled_gradient_strip, strip_l2,
                       _flux_divergence)
from .errors import NegativeRadicand
from .fields import StripField, SurfaceField, zeros
from .spectral import (VariableSymbol, apply_symbol, inner, l2_norm,
                       poisson_weight, scaled_gradient, sobolev_norm)


def surface_metric(zeta, params):
    """Area-element factor rho = sqrt(1 + eps^2 mu |grad^gamma zeta|^2)."""
    zx, zy = scaled_gradient(zeta, params)
    vals = np.sqrt(1.0 + params.rho_coeff * (zx.values ** 2 + zy.values ** 2))
    return SurfaceField(vals, zeta.grid)


@dataclass
class DNContext:
    """Immutable per-surface state shared by all operator applications."""

    zeta: SurfaceField
    b: SurfaceField
    params: object
    grid: object
    transform: StripTransform
    rho: SurfaceField
    engine: FlatStripEngine
    tol: float

    @property
    def h_min(self):
        return self.transform.h_min


class DNFactory:
    """Builds DN contexts over a fixed grid, regime and bottom.

    The flat-strip machinery (profiles, per-mode inverses) depends only on
    (grid, params) and is assembled once here; contexts for different
    surfaces share it.
    """

    def __init__(self, grid, params, b=None, tol=1e-10, h_floor=0.0):
        self.grid = grid
        self.params = params
        self.b = b if b is not None else zeros(grid)
        self.tol = tol
        self.h_floor = h_floor
        self.engine = FlatStripEngine(grid, params)

    def context(self, zeta):
        tr = build_transform(zeta, self.b, self.params, self.grid,
                             h_floor=self.h_floor)
        return DNContext(zeta, self.b, self.params, self.grid, tr,
                         surface_metric(zeta, self.params), self.engine,
                         self.tol)


def _correction(ctx, ux, uy, uz):
    """Solve for the non-flat part of the extension given the lifted
    gradient; returns (v levels array, report)."""
    tr, g, p = ctx.transform, ctx.grid, ctx.params
    q1, q2, q3 = tr.apply_q(ux, uy, uz)
    f_vals = _flux_divergence(g, p, -q1, -q2, -q3)
    bottom = q3[:, :, -1]
    solver = StripSolver(ctx.engine, tol=ctx.tol)
    return solver.solve(tr, f_vals, bottom)


def dn_apply(ctx, psi):
    """G psi: conormal surface flux of the harmonic extension of psi.

    The flat lifting contributes its exact multiplier
    sqrt(mu)|k^gamma| tanh(sqrt(mu)|k^gamma|); the correction solve carries
    all surface/bottom dependence.
    """
    g = ctx.grid
    g.check_same(psi.grid)
    flat_part = ctx.engine.dn_flat(psi.values)
    if ctx.transform.is_flat:
        return SurfaceField(flat_part, g)
    _, ux, uy, uz = ctx.engine.lift(psi.values)
    v, _ = _correction(ctx, ux, uy, uz)
    tr = ctx.transform
    q3_flat = tr.apply_q(ux, uy, uz)[2]
    vx, vy, vz = scaled_gradient_strip(g, ctx.params, v)
    q3_v = tr.apply_q(vx, vy, vz)[2]
    top = flat_part + q3_flat[:, :, 0] + vz[:, :, 0] + q3_v[:, :, 0]
    return SurfaceField(top, g)


def dn_extension(ctx, psi):
    """The harmonic extension psi^b itself (for diagnostics)."""
    from .elliptic import dirichlet_extension
    u, _ = dirichlet_extension(psi, ctx.transform, engine=ctx.engine,
                               tol=ctx.tol)
    return u


def principal_symbol(ctx):
    """First-order symbol of the DN operator,

        g(x, xi) = sqrt(mu (rho^2 |xi|^2 - eps^2 mu (xi . grad zeta)^2))

    evaluated at the anisotropic frequency.  The radicand is nonnegative
    by Cauchy-Schwarz; a negative value signals an assembly bug.
    """
    p = ctx.params
    zx, zy = scaled_gradient(ctx.zeta, p)
    rc, mu = p.rho_coeff, p.mu

    def evaluator(cs, xi1, xi2):
        gx, gy = cs
        ksq = xi1 ** 2 + xi2 ** 2
        dot = xi1 * gx + xi2 * gy
        radicand = (1.0 + rc * (gx ** 2 + gy ** 2)) * ksq - rc * dot ** 2
        rmin = np.min(radicand)
        if rmin < -1e-12 * max(np.max(np.abs(radicand)), 1.0):
            raise NegativeRadicand(f"principal symbol radicand {rmin:.3e} < 0")
        return np.sqrt(mu * np.maximum(radicand, 0.0))

    return VariableSymbol(evaluator, order=1, coeffs=(zx, zy))


def dn_principal(ctx, psi):
    """Apply the quantized principal part of the DN operator."""
    return apply_symbol(principal_symbol(ctx), psi, ctx.params)


def dn_residual(ctx, psi):
    """Smoothing remainder G psi - Op(g) psi."""
    return dn_apply(ctx, psi) - dn_principal(ctx, psi)


def surface_velocity(ctx, psi, g_psi=None):
    """Vertical and horizontal surface velocities of the extension:

    Z = (G psi + eps mu grad zeta . grad psi) / rho^2,
    v = grad psi - eps Z grad zeta      (scaled gradients throughout).
    """
    p = ctx.params
    if g_psi is None:
        g_psi = dn_apply(ctx, psi)
    zx, zy = scaled_gradient(ctx.zeta, p)
    px, py = scaled_gradient(psi, p)
    rho2 = ctx.rho.values ** 2
    Z = (g_psi.values + p.epsilon * p.mu
         * (zx.values * px.values + zy.values * py.values)) / rho2
    v1 = px.values - p.epsilon * Z * zx.values
    v2 = py.values - p.epsilon * Z * zy.values
    g = ctx.grid
    return SurfaceField(Z, g), SurfaceField(v1, g), SurfaceField(v2, g)


def dn_shape_derivative(ctx, psi, h, g_psi=None):
    """Derivative of zeta -> G[eps zeta] psi in the direction h:

        dG . h = -eps G(h Z) - eps mu div^gamma (h v).
    """
    from .spectral import scaled_divergence
    p = ctx.params
    Z, v1, v2 = surface_velocity(ctx, psi, g_psi)
    g = ctx.grid
    hZ = SurfaceField(h.values * Z.values, g)
    term1 = dn_apply(ctx, hZ)
    div = scaled_divergence(SurfaceField(h.values * v1.values, g),
                            SurfaceField(h.values * v2.values, g), p)
    return SurfaceField(-p.epsilon * term1.values
                        - p.epsilon * p.mu * div.values, g)


# ---------------------------------------------------------------------------
# the second-order surface operator from linearized capillarity
# ---------------------------------------------------------------------------


def capillary_laplacian(a, f, params, power=1):
    """Apply the scaled second-order operator

        d(a) f = |D^gamma|^2 f
                 - eps^2 mu rho(a)^-2 (grad a . D^gamma)^2 f

    ``power`` times; with constant a it reduces to |D^gamma|^(2 power).
    """
    g = f.grid
    g.check_same(a.grid)
    p = params
    ax, ay = scaled_gradient(a, p)
    rho2 = 1.0 + p.rho_coeff * (ax.values ** 2 + ay.values ** 2)
    coeff = p.rho_coeff / rho2
    KX2 = g.KX ** 2
    KY2 = (p.gamma * g.KY) ** 2
    KXY = p.gamma * g.KX * g.KY
    out = f.values
    for _ in range(power):
        spec = np.fft.fft2(out)
        lap = np.fft.ifft2((KX2 + KY2) * spec).real
        fxx = np.fft.ifft2(KX2 * spec).real
        fxy = np.fft.ifft2(KXY * spec).real
        fyy = np.fft.ifft2(KY2 * spec).real
        out = lap - coeff * (ax.values ** 2 * fxx
                             + 2.0 * ax.values * ay.values * fxy
                             + ay.values ** 2 * fyy)
    return SurfaceField(out, g)


# ---------------------------------------------------------------------------
# commutator diagnostics
# ---------------------------------------------------------------------------


def commutator_diagnostic(ctx, u, k=1, which="raw", s=0):
    """Measure [(1/mu) G, d(zeta)^k] u (raw) or the rho-weighted variant
    [(1/mu) rho^-1 G, d(zeta)^k] u by double application and differencing.

    Returns a dict with the measured norm, the norm divided by the
    predicted small-parameter power (eps for raw, sqrt(eps) for weighted),
    the Sobolev budget of u consumed, and the cancellation noise floor.
    """
    p = ctx.params
    mu = p.mu
    dk_u = capillary_laplacian(ctx.zeta, u, p, power=k)
    if which == "raw":
        a_path = dn_apply(ctx, dk_u) * (1.0 / mu)
        b_path = capillary_laplacian(ctx.zeta, dn_apply(ctx, u) * (1.0 / mu),
                                     p, power=k)
        norm = l2_norm(a_path - b_path)
        ratio = norm / p.epsilon
        budget = sobolev_norm(u, 2 * k, "p_heps", p)
    elif which == "rho_weighted":
        inv_rho = 1.0 / ctx.rho.values
        g = ctx.grid
        a_raw = dn_apply(ctx, dk_u)
        a_path = SurfaceField(inv_rho * a_raw.values / mu, g)
        gu = dn_apply(ctx, u)
        b_path = capillary_laplacian(
            ctx.zeta, SurfaceField(inv_rho * gu.values / mu, g), p, power=k)
        norm = sobolev_norm(a_path - b_path, s, "h_eps", p)
        ratio = norm / np.sqrt(p.epsilon)
        budget = sobolev_norm(u, max(2 * k + s - 1, 0), "p_heps", p)
    else:
        raise ValueError(f"unknown commutator flavor {which!r}")
    noise = ctx.tol * (l2_norm(a_path) + l2_norm(b_path))
    return {"norm": norm, "ratio": ratio, "budget": budget, "noise": noise,
            "k": k, "which": which, "s": s}


def dn_time_commutator(ctx_a, ctx_b, u):
    """Quadratic form of the surface-motion commutator.

    Differences G across two contexts that share everything but zeta and
    returns ((G_b - G_a) u, u) normalized by
    eps |grad^gamma (zeta_b - zeta_a)|_inf |P u|_2^2; the time step cancels
    from the ratio.
    """
    p = ctx_a.params
    diff = dn_apply(ctx_b, u) - dn_apply(ctx_a, u)
    quad = inner(diff, u)
    dz = ctx_b.zeta - ctx_a.zeta
    gx, gy = scaled_gradient(dz, p)
    slope = float(np.max(np.hypot(gx.values, gy.values)))
    pw = poisson_weight(ctx_a.grid, p)
    pu = np.fft.ifft2(pw * np.fft.fft2(u.values)).real
    pu_sq = l2_norm(SurfaceField(pu, ctx_a.grid)) ** 2
    denom = p.epsilon * slope * pu_sq
    ratio = quad / denom if denom > 0 else 0.0
    return {"quad": quad, "ratio": ratio, "slope": slope}


# ---------------------------------------------------------------------------
# approximate extension built from the first-order symbol factorization
# ---------------------------------------------------------------------------


def _sigma_coeffs_at(ctx, s):
    """Strip-scaled horizontal gradient of sigma at height s (sigma is
    affine in z, so this is a closed form): sqrt(mu) times the scaled
    surface gradients of eps((s+1) zeta - s b)."""
    p = ctx.params
    c = p.epsilon * p.sqrt_mu
    zx, zy = scaled_gradient(ctx.zeta, p)
    bx, by = scaled_gradient(ctx.b, p)
    s1 = c * ((s + 1.0) * zx.values - s * bx.values)
    s2 = c * ((s + 1.0) * zy.values - s * by.values)
    return s1, s2


def eta_symbol(ctx, z_level, sign=+1):
    """First-order factorization symbol at height z:

        eta_pm = sqrt(mu) (1+dz sigma)/(1+|S|^2)
                 (i S.xi pm sqrt((1+|S|^2)|xi|^2 - (S.xi)^2))

    with S the scaled horizontal gradient of sigma at that height.
    """
    p = ctx.params
    g = ctx.grid
    s1, s2 = _sigma_coeffs_at(ctx, z_level)
    dzs = ctx.transform.dz_sigma
    sm = p.sqrt_mu

    def evaluator(cs, xi1, xi2):
        c1, c2, cd = cs
        S2 = c1 ** 2 + c2 ** 2
        dot = c1 * xi1 + c2 * xi2
        ksq = xi1 ** 2 + xi2 ** 2
        root = np.sqrt(np.maximum((1.0 + S2) * ksq - dot ** 2, 0.0))
        return sm * (1.0 + cd) / (1.0 + S2) * (1j * dot + sign * root)

    coeffs = (SurfaceField(s1, g), SurfaceField(s2, g), SurfaceField(dzs, g))
    return VariableSymbol(evaluator, order=1, coeffs=coeffs)


def approximate_extension_symbol(ctx, z_level, n_quad=12):
    """Order-zero symbol exp(-int_z^0 eta_plus ds) with the integral done
    by Gauss-Legendre quadrature (sigma is affine in z, so eta_plus is
    evaluable at arbitrary heights).

    The per-node coefficient pairs ride along as ordinary coefficient
    fields, so the symbol honours the generic evaluator contract.
    """
    p = ctx.params
    g = ctx.grid
    sm = p.sqrt_mu
    nodes, weights = np.polynomial.legendre.leggauss(n_quad)
    s_nodes = 0.5 * (0.0 - z_level) * nodes + 0.5 * (0.0 + z_level)
    s_weights = 0.5 * (0.0 - z_level) * weights
    coeffs = [SurfaceField(ctx.transform.dz_sigma.copy(), g)]
    for s in s_nodes:
        c1, c2 = _sigma_coeffs_at(ctx, s)
        coeffs.append(SurfaceField(c1, g))
        coeffs.append(SurfaceField(c2, g))

    def evaluator(cs, xi1, xi2):
        cd = cs[0]
        ksq = xi1 ** 2 + xi2 ** 2
        integral = 0.0
        for q, w in enumerate(s_weights):
            c1, c2 = cs[1 + 2 * q], cs[2 + 2 * q]
            S2 = c1 ** 2 + c2 ** 2
            dot = c1 * xi1 + c2 * xi2
            root = np.sqrt(np.maximum((1.0 + S2) * ksq - dot ** 2, 0.0))
            integral = integral + w * (sm * (1.0 + cd) / (1.0 + S2)
                                       * (1j * dot + root))
        return np.exp(-integral)

    return VariableSymbol(evaluator, order=0, coeffs=tuple(coeffs))


def approximate_extension(ctx, u, n_quad=12):
    """Extension candidate built by quantizing the integrated symbol at
    every collocation level (diagnostic; not on the evolution path)."""
    g = ctx.grid
    out = np.empty(g.sshape)
    for j, z in enumerate(g.z):
        if z == 0.0:
            out[:, :, j] = u.values
            continue
        sym = approximate_extension_symbol(ctx, z, n_quad)
        out[:, :, j] = apply_symbol(sym, u, ctx.params).values
    return StripField(out, g)


def extension_defect(ctx, u):
    """Strip-energy comparison of the true and approximate extensions.

    Returns the gradient norms of the defect and their ratio to the
    gradient norm of the true extension.
    """
    g, p = ctx.grid, ctx.params
    true_ext = dn_extension(ctx, u)
    appr = approximate_extension(ctx, u)
    diff = true_ext.values - appr.values
    dx, dy, dz = scaled_gradient_strip(g, p, diff)
    tx, ty, tz = scaled_gradient_strip(g, p, true_ext.values)
    dn_norm = np.sqrt(strip_l2(g, dx) ** 2 + strip_l2(g, dy) ** 2
                      + strip_l2(g, dz) ** 2)
    tn_norm = np.sqrt(strip_l2(g, tx) ** 2 + strip_l2(g, ty) ** 2
                      + strip_l2(g, tz) ** 2)
    dz_norm = strip_l2(g, dz)
    return {"defect_energy": dn_norm, "true_energy": tn_norm,
            "defect_vertical": dz_norm,
            "relative": dn_norm / tn_norm if tn_norm > 0 else 0.0}
