"""Periodic horizontal grid plus Chebyshev vertical collocation.

The horizontal domain is the torus [0, Lx) x [0, Ly) sampled on Nx x Ny
points; the vertical coordinate z lives on [-1, 0] at Chebyshev-Lobatto
nodes (z[0] = 0 is the surface, z[-1] = -1 the bottom).

Nyquist handling: the unpaired Nyquist wavenumber cannot carry a sign, so
every multiplier and symbol is evaluated with the Nyquist entry of the
wavenumber replaced by zero.  Derivative multipliers therefore vanish on
that mode while the identity multiplier stays exact.
"""

import numpy as np

from .errors import GridMismatch


def chebyshev_lobatto(n):
    """Nodes and differentiation matrix on [-1, 1], Trefethen ordering.

    Returns (t, D) with t[0] = 1 and t[-1] = -1.
    """
    if n < 2:
        raise ValueError("need at least 2 Chebyshev nodes")
    j = np.arange(n)
    t = np.cos(np.pi * j / (n - 1))
    c = np.ones(n)
    c[0] = c[-1] = 2.0
    c = c * (-1.0) ** j
    T = np.tile(t, (n, 1)).T
    dT = T - T.T + np.eye(n)
    D = np.outer(c, 1.0 / c) / dT
    D -= np.diag(D.sum(axis=1))
    return t, D


def clenshaw_curtis_weights(n):
    """Quadrature weights for the Chebyshev-Lobatto nodes on [-1, 1]."""
    if n == 2:
        return np.array([1.0, 1.0])
    m = n - 1
    theta = np.pi * np.arange(n) / m
    w = np.zeros(n)
    v = np.ones(m - 1)
    for k in range(1, m // 2 + 1):
        if 2 * k == m:
            v -= np.cos(2 * k * theta[1:-1]) / (4 * k * k - 1)
        else:
            v -= 2.0 * np.cos(2 * k * theta[1:-1]) / (4 * k * k - 1)
    w[1:-1] = 2.0 * v / m
    # endpoint weight: 1/(m^2 - 1) for even m, 1/m^2 for odd m
    if m % 2 == 0:
        w[0] = w[-1] = 1.0 / (m * m - 1)
    else:
        w[0] = w[-1] = 1.0 / (m * m)
    return w


class SpectralGrid:
    """Discrete torus x Chebyshev strip with cached transform metadata."""

    def __init__(self, Lx, Ly, Nx, Ny, Nz=16):
        if Nx % 2 or Ny % 2 or Nx < 8 or Ny < 8:
            raise ValueError("Nx, Ny must be even and >= 8")
        if Nz < 4:
            raise ValueError("Nz must be >= 4")
        if Lx <= 0 or Ly <= 0:
            raise ValueError("periods must be positive")
        self.Lx, self.Ly = float(Lx), float(Ly)
        self.Nx, self.Ny, self.Nz = int(Nx), int(Ny), int(Nz)

        self.x = self.Lx * np.arange(Nx) / Nx
        self.y = self.Ly * np.arange(Ny) / Ny
        self.X, self.Y = np.meshgrid(self.x, self.y, indexing="ij")

        # full-spectrum wavenumbers; *_d variants zero the Nyquist entry
        self.kx = 2.0 * np.pi * np.fft.fftfreq(Nx, d=self.Lx / Nx)
        self.ky = 2.0 * np.pi * np.fft.fftfreq(Ny, d=self.Ly / Ny)
        self.kx_d = self.kx.copy()
        self.kx_d[Nx // 2] = 0.0
        self.ky_d = self.ky.copy()
        self.ky_d[Ny // 2] = 0.0
        self.KX = self.kx_d[:, None] * np.ones((1, Ny))
        self.KY = np.ones((Nx, 1)) * self.ky_d[None, :]

        # rfft layout used by the strip solver (real fields)
        self.kyr = 2.0 * np.pi * np.arange(Ny // 2 + 1) / self.Ly
        self.kyr_d = self.kyr.copy()
        self.kyr_d[-1] = 0.0
        self.KXr = self.kx_d[:, None] * np.ones((1, Ny // 2 + 1))
        self.KYr = np.ones((Nx, 1)) * self.kyr_d[None, :]

        t, Dt = chebyshev_lobatto(Nz)
        self.z = 0.5 * (t - 1.0)          # z[0] = 0 (surface), z[-1] = -1
        self.Dz = 2.0 * Dt                # d/dz on [-1, 0]
        self.Dz2 = self.Dz @ self.Dz
        self.wz = 0.5 * clenshaw_curtis_weights(Nz)   # integrates over [-1, 0]

        self.cell_area = self.Lx * self.Ly / (Nx * Ny)

    # -- shape helpers -------------------------------------------------

    @property
    def hshape(self):
        return (self.Nx, self.Ny)

    @property
    def sshape(self):
        return (self.Nx, self.Ny, self.Nz)

    def compatible(self, other):
        return (self.Nx == other.Nx and self.Ny == other.Ny
                and self.Lx == other.Lx and self.Ly == other.Ly)

    def check_same(self, other):
        if self is other:
            return
        if not (self.compatible(other) and self.Nz == other.Nz):
            raise GridMismatch("fields live on different grids")

    # -- anisotropic frequency ----------------------------------------

    def k_aniso(self, gamma, layout="full"):
        """|xi^gamma| on the (Nyquist-zeroed) wavenumber mesh."""
        if layout == "full":
            return np.hypot(self.KX, gamma * self.KY)
        return np.hypot(self.KXr, gamma * self.KYr)

    def dealias_mask(self, layout="full"):
        """Two-thirds-rule mask (True on retained modes)."""
        jx = np.abs(np.fft.fftfreq(self.Nx) * self.Nx)
        keepx = jx <= self.Nx // 3
        if layout == "full":
            jy = np.abs(np.fft.fftfreq(self.Ny) * self.Ny)
        else:
            jy = np.arange(self.Ny // 2 + 1)
        keepy = jy <= self.Ny // 3
        return keepx[:, None] & keepy[None, :]

    def __repr__(self):
        return (f"SpectralGrid(Lx={self.Lx:g}, Ly={self.Ly:g}, "
                f"Nx={self.Nx}, Ny={self.Ny}, Nz={self.Nz})")
