"""Flattening diffeomorphism and the scaled elliptic solver on the strip.

The fluid domain {-1 + eps*b < z < eps*zeta} is pulled back to the flat
strip torus x [-1, 0] by z -> z + sigma(x_h, z) with
sigma = eps*(z+1)*zeta - eps*z*b.  In flattened coordinates the scaled
Laplacian becomes div^s ((I + Q) grad^s u) for the scaled gradient
grad^s = (sqrt(mu) d/dx, gamma*sqrt(mu) d/dy, d/dz) and the symmetric
matrix

        Q = [ dz_sigma     0        -s1 ]
            [ 0            dz_sigma -s2 ]
            [ -s1          -s2      (-dz_sigma + s1^2 + s2^2)/(1+dz_sigma) ]

with s1 = sqrt(mu) dx sigma and s2 = gamma*sqrt(mu) dy sigma.

Discretization: Fourier in the horizontal, Chebyshev-Lobatto collocation
in z.  Solves use the exact per-mode flat inverse as a preconditioner for
GMRES; since Q = O(eps) the preconditioned operator is a small
perturbation of the identity.
"""

from dataclasses import dataclass

import numpy as np
from scipy.sparse.linalg import LinearOperator, gmres

from .errors import AdmissibilityViolation, NonConvergence
from .fields import StripField, SurfaceField


def _rfft2(a):
    return np.fft.rfft2(a, axes=(0, 1))


def _irfft2(a, shape):
    return np.fft.irfft2(a, s=shape, axes=(0, 1))


# ---------------------------------------------------------------------------
# transform assembly
# ---------------------------------------------------------------------------


@dataclass
class StripTransform:
    """Flattening data: sigma, its scaled derivatives, and Q."""

    grid: object
    params: object
    sigma: np.ndarray        # (Nx, Ny, Nz)
    dz_sigma: np.ndarray     # (Nx, Ny), z-independent (sigma affine in z)
    s1: np.ndarray           # sqrt(mu) dx sigma, (Nx, Ny, Nz)
    s2: np.ndarray           # gamma*sqrt(mu) dy sigma, (Nx, Ny, Nz)
    q33: np.ndarray          # (Nx, Ny, Nz)
    h_min: float

    @property
    def is_flat(self):
        return self.h_min == 1.0 and not (np.any(self.dz_sigma)
                                          or np.any(self.s1) or np.any(self.s2))

    def q_entries(self):
        """The six independent entries of Q as StripFields (11, 22, 33,
        12, 13, 23)."""
        g = self.grid
        ones = np.ones(g.sshape)
        dzs = self.dz_sigma[:, :, None] * ones
        zero = np.zeros(g.sshape)
        return {
            "11": StripField(dzs, g),
            "22": StripField(dzs.copy(), g),
            "33": StripField(self.q33.copy(), g),
            "12": StripField(zero, g),
            "13": StripField(-self.s1.copy(), g),
            "23": StripField(-self.s2.copy(), g),
        }

    def apply_q(self, wx, wy, wz):
        """Pointwise (Q w) for a strip vector field w."""
        dzs = self.dz_sigma[:, :, None]
        q1 = dzs * wx - self.s1 * wz
        q2 = dzs * wy - self.s2 * wz
        q3 = -self.s1 * wx - self.s2 * wy + self.q33 * wz
        return q1, q2, q3


def build_transform(zeta, b, params, grid, h_floor=0.0):
    """Assemble the flattening for surface zeta and bottom b.

    Raises AdmissibilityViolation when min(1 + eps*zeta - eps*b) <= h_floor.
    """
    grid.check_same(zeta.grid)
    grid.check_same(b.grid)
    eps = params.epsilon
    depth = 1.0 + eps * (zeta.values - b.values)
    h_min = float(depth.min())
    if h_min <= h_floor:
        raise AdmissibilityViolation(h_min, h_floor)

    z = grid.z
    zp1 = (z + 1.0)[None, None, :]
    zm = z[None, None, :]
    sigma = eps * (zp1 * zeta.values[:, :, None] - zm * b.values[:, :, None])
    dz_sigma = eps * (zeta.values - b.values)

    # horizontal scaled derivatives of the z-affine sigma
    sm, gm = params.sqrt_mu, params.gamma * params.sqrt_mu
    zspec = _rfft2(zeta.values)
    bspec = _rfft2(b.values)
    dxz = _irfft2(1j * grid.KXr * zspec, grid.hshape)
    dyz = _irfft2(1j * grid.KYr * zspec, grid.hshape)
    dxb = _irfft2(1j * grid.KXr * bspec, grid.hshape)
    dyb = _irfft2(1j * grid.KYr * bspec, grid.hshape)
    s1 = eps * sm * (zp1 * dxz[:, :, None] - zm * dxb[:, :, None])
    s2 = eps * gm * (zp1 * dyz[:, :, None] - zm * dyb[:, :, None])

    denom = 1.0 + dz_sigma[:, :, None]
    q33 = (-dz_sigma[:, :, None] + s1 ** 2 + s2 ** 2) / denom
    return StripTransform(grid, params, sigma, dz_sigma, s1, s2, q33, h_min)


# ---------------------------------------------------------------------------
# flat-strip machinery (closed forms + per-mode inverses)
# ---------------------------------------------------------------------------


def solve_flat_mode(khat, dirichlet, params):
    """Exact flat-strip harmonic extension of one Fourier mode.

    Returns a callable z -> cosh(lam (z+1)) / cosh(lam) * dirichlet with
    lam = sqrt(mu) |k^gamma|; the k = 0 mode extends as a constant.  The
    profile satisfies the mode ODE u'' = lam^2 u with u(0) = dirichlet
    and u'(-1) = 0.
    """
    k1, k2 = khat
    lam = params.sqrt_mu * np.hypot(k1, params.gamma * k2)

    def profile(z):
        z = np.asarray(z, dtype=float)
        if lam == 0.0:
            return dirichlet * np.ones_like(z)
        num = np.exp(lam * z) * (1.0 + np.exp(-2.0 * lam * (z + 1.0)))
        return dirichlet * num / (1.0 + np.exp(-2.0 * lam))

    return profile


class FlatStripEngine:
    """Per-mode flat solves, lifting profiles and the stacked preconditioner.

    Depends only on (grid, params); independent of the surface, so one
    engine is shared by every solve of a simulation.
    """

    def __init__(self, grid, params):
        self.grid = grid
        self.params = params
        g = grid
        self.lam = params.sqrt_mu * g.k_aniso(params.gamma, layout="r")
        z = g.z
        lam = self.lam[:, :, None]
        zp1 = (z + 1.0)[None, None, :]
        decay = np.exp(-2.0 * lam * zp1)
        norm = 1.0 + np.exp(-2.0 * lam)
        self.profile = np.exp(lam * z[None, None, :]) * (1.0 + decay) / norm
        self.dprofile = lam * np.exp(lam * z[None, None, :]) * (1.0 - decay) / norm
        # flat Dirichlet-Neumann multiplier  lam * tanh(lam)
        self.dn_multiplier = self.lam * np.tanh(self.lam)

        # stacked inverse of the flat collocation operator per mode;
        # unknowns are u at z-levels 1..Nz-1 (level 0 is the Dirichlet row)
        Nz = g.Nz
        m = Nz - 1
        base = np.zeros((m, m))
        base[: m - 1, :] = g.Dz2[1: Nz - 1, 1:]
        base[m - 1, :] = -g.Dz[Nz - 1, 1:]
        sel = np.eye(m)
        sel[m - 1, m - 1] = 0.0
        c = (self.lam ** 2).reshape(-1)
        stacked = base[None, :, :] - c[:, None, None] * sel[None, :, :]
        self.inv = np.linalg.inv(stacked)
        self._m = m

    def solve_packed(self, packed):
        """Invert the flat operator: packed (Nx, Ny, Nz-1) residual rows
        [interior levels 1..Nz-2, bottom conormal] -> field levels array
        (Nx, Ny, Nz) with the zero Dirichlet top row included."""
        g = self.grid
        m = self._m
        rhat = _rfft2(packed).reshape(-1, m)
        uhat = np.einsum("kij,kj->ki", self.inv, rhat)
        u_lv = _irfft2(uhat.reshape(g.Nx, g.Ny // 2 + 1, m), g.hshape)
        out = np.zeros(g.sshape)
        out[:, :, 1:] = u_lv
        return out

    def lift(self, psi_vals):
        """Flat harmonic extension of surface data and its scaled gradient.

        Returns (u, ux, uy, uz) as (Nx, Ny, Nz) arrays; uz is evaluated
        from the analytic profile derivative, so uz(-1) = 0 exactly.
        """
        g, p = self.grid, self.params
        spec = _rfft2(psi_vals)[:, :, None]
        sm, gm = p.sqrt_mu, p.gamma * p.sqrt_mu
        u = _irfft2(spec * self.profile, g.hshape)
        ux = _irfft2(1j * g.KXr[:, :, None] * spec * self.profile, g.hshape) * sm
        uy = _irfft2(1j * g.KYr[:, :, None] * spec * self.profile, g.hshape) * gm
        uz = _irfft2(spec * self.dprofile, g.hshape)
        return u, ux, uy, uz

    def dn_flat(self, psi_vals):
        """Flat Dirichlet-Neumann map lam*tanh(lam) psi (exact)."""
        return _irfft2(self.dn_multiplier * _rfft2(psi_vals), self.grid.hshape)


# ---------------------------------------------------------------------------
# variable-coefficient solve
# ---------------------------------------------------------------------------


@dataclass
class EllipticProblem:
    """Right-hand sides for div^s (I+Q) grad^s u = source on the strip."""

    transform: StripTransform
    f: StripField = None            # interior source
    g_vec: tuple = None             # divergence-form source (3 StripFields)
    neumann: SurfaceField = None    # bottom conormal datum


@dataclass
class EllipticReport:
    iterations: int
    residual: float            # relative preconditioned residual
    strong_residual: float     # relative strong-form residual


def scaled_gradient_strip(grid, params, u):
    """grad^s u = (sqrt(mu) dx, gamma sqrt(mu) dy, dz) of a strip array."""
    sm, gm = params.sqrt_mu, params.gamma * params.sqrt_mu
    spec = _rfft2(u)
    ux = _irfft2(1j * grid.KXr[:, :, None] * spec, grid.hshape) * sm
    uy = _irfft2(1j * grid.KYr[:, :, None] * spec, grid.hshape) * gm
    uz = u @ grid.Dz.T
    return ux, uy, uz


def _flux_divergence(grid, params, w1, w2, w3):
    sm, gm = params.sqrt_mu, params.gamma * params.sqrt_mu
    s1 = _rfft2(w1)
    s2 = _rfft2(w2)
    div_h = _irfft2(1j * sm * grid.KXr[:, :, None] * s1
                    + 1j * gm * grid.KYr[:, :, None] * s2, grid.hshape)
    return div_h + w3 @ grid.Dz.T


def apply_strip_operator(tr, u):
    """Strong form: returns (div^s (I+Q) grad^s u, conormal flux w3)."""
    g, p = tr.grid, tr.params
    ux, uy, uz = scaled_gradient_strip(g, p, u)
    q1, q2, q3 = tr.apply_q(ux, uy, uz)
    w1, w2, w3 = ux + q1, uy + q2, uz + q3
    return _flux_divergence(g, p, w1, w2, w3), w3


def strip_energy(tr, u, w):
    """Discrete energy bilinear form  int (I+Q) grad^s u . grad^s w."""
    g, p = tr.grid, tr.params
    ux, uy, uz = scaled_gradient_strip(g, p, u)
    wx, wy, wz = scaled_gradient_strip(g, p, w)
    q1, q2, q3 = tr.apply_q(ux, uy, uz)
    dens = (ux + q1) * wx + (uy + q2) * wy + (uz + q3) * wz
    return float(np.sum(dens @ g.wz) * g.cell_area)


def strip_l2(grid, u):
    """L2 norm over the strip (horizontal trapezoid x Clenshaw-Curtis)."""
    return float(np.sqrt(np.sum((u ** 2) @ grid.wz) * grid.cell_area))


class StripSolver:
    """Preconditioned Krylov solve of the variable-coefficient problem."""

    def __init__(self, engine, tol=1e-10, restart=30, maxouter=8):
        self.engine = engine
        self.tol = tol
        self.restart = restart
        self.maxouter = maxouter

    def _pack(self, interior, bottom):
        g = self.engine.grid
        out = np.empty((g.Nx, g.Ny, g.Nz - 1))
        out[:, :, : g.Nz - 2] = interior[:, :, 1: g.Nz - 1]
        out[:, :, g.Nz - 2] = bottom
        return out

    def solve(self, tr, f_vals, bottom_vals):
        """Solve div^s (I+Q) grad^s u = f, u(0) = 0,
        -e3.(I+Q) grad^s u |_{z=-1} = bottom.

        Returns (u levels array, EllipticReport).
        """
        eng = self.engine
        g = eng.grid
        n = g.Nx * g.Ny * (g.Nz - 1)

        rhs_packed = self._pack(f_vals, bottom_vals)
        b = eng.solve_packed(rhs_packed)[:, :, 1:].reshape(n)

        def matvec(x):
            u = np.zeros(g.sshape)
            u[:, :, 1:] = x.reshape(g.Nx, g.Ny, g.Nz - 1)
            div, w3 = apply_strip_operator(tr, u)
            packed = self._pack(div, -w3[:, :, -1])
            return eng.solve_packed(packed)[:, :, 1:].reshape(n)

        if tr.is_flat:
            u = np.zeros(g.sshape)
            u[:, :, 1:] = b.reshape(g.Nx, g.Ny, g.Nz - 1)
            return u, EllipticReport(0, 0.0, self._strong(tr, u, f_vals,
                                                          bottom_vals))

        op = LinearOperator((n, n), matvec=matvec, dtype=float)
        iters = [0]

        def cb(_):
            iters[0] += 1

        x, info = gmres(op, b, x0=b.copy(), rtol=self.tol, atol=0.0,
                        restart=self.restart, maxiter=self.maxouter,
                        callback=cb, callback_type="pr_norm")
        bnorm = np.linalg.norm(b)
        res = np.linalg.norm(matvec(x) - b) / bnorm if bnorm > 0 else 0.0
        if info != 0 and res > self.tol * 10:
            raise NonConvergence(iters[0], res)
        u = np.zeros(g.sshape)
        u[:, :, 1:] = x.reshape(g.Nx, g.Ny, g.Nz - 1)
        return u, EllipticReport(iters[0], res,
                                 self._strong(tr, u, f_vals, bottom_vals))

    def _strong(self, tr, u, f_vals, bottom_vals):
        g = self.engine.grid
        div, w3 = apply_strip_operator(tr, u)
        r_int = div[:, :, 1: g.Nz - 1] - f_vals[:, :, 1: g.Nz - 1]
        r_bot = -w3[:, :, -1] - bottom_vals
        scale = max(np.max(np.abs(f_vals)), np.max(np.abs(bottom_vals)),
                    np.max(np.abs(u)), 1e-300)
        return float(max(np.max(np.abs(r_int)), np.max(np.abs(r_bot))) / scale)


def solve_elliptic(problem, kind="general_source", engine=None, tol=1e-10):
    """Solve the strip problem with zero Dirichlet data on z = 0.

    kind "general_source": sources are (f, neumann).
    kind "dirichlet_zero_divform": source is div^s g_vec with bottom datum
    -e3 . g_vec(-1), per the divergence-form problem.

    Returns (StripField, EllipticReport).
    """
    tr = problem.transform
    g, p = tr.grid, tr.params
    if engine is None:
        engine = FlatStripEngine(g, p)
    if kind == "dirichlet_zero_divform":
        if problem.g_vec is None:
            raise ValueError("divergence-form solve needs g_vec")
        g1, g2, g3 = (gf.values for gf in problem.g_vec)
        f_vals = _flux_divergence(g, p, g1, g2, g3)
        bottom = -g3[:, :, -1]
    elif kind == "general_source":
        f_vals = problem.f.values if problem.f is not None else np.zeros(g.sshape)
        bottom = (problem.neumann.values if problem.neumann is not None
                  else np.zeros(g.hshape))
    else:
        raise ValueError(f"unknown elliptic kind {kind!r}")
    solver = StripSolver(engine, tol=tol)
    u, report = solver.solve(tr, f_vals, bottom)
    return StripField(u, g), report


def dirichlet_extension(psi, transform, engine=None, tol=1e-10):
    """Harmonic extension with u(0) = psi and zero conormal bottom flux.

    Flat lifting (exact per-mode cosh profile) plus a correction solve with
    the Q-dependent sources g = -Q grad^s psi_flat and bottom datum
    e3 . Q grad^s psi_flat(-1).  In the flat case the correction vanishes
    and the lifting is returned unchanged.
    """
    tr = transform
    g, p = tr.grid, tr.params
    g.check_same(psi.grid)
    if engine is None:
        engine = FlatStripEngine(g, p)
    u_flat, ux, uy, uz = engine.lift(psi.values)
    if tr.is_flat:
        return StripField(u_flat, g), EllipticReport(0, 0.0, 0.0)
    q1, q2, q3 = tr.apply_q(ux, uy, uz)
    f_vals = _flux_divergence(g, p, -q1, -q2, -q3)
    bottom = q3[:, :, -1]
    solver = StripSolver(engine, tol=tol)
    v, report = solver.solve(tr, f_vals, bottom)
    return StripField(u_flat + v, g), report
