"""Field containers and the portable random-field corpus.

Random fields are generated from a SplitMix64 counter stream so that a
reimplementation in any language reproduces the corpus bit-for-bit.  The
exact recipe is documented in :func:`random_band_limited`.
"""

from dataclasses import dataclass

import numpy as np

from .errors import GridMismatch
from .grid import SpectralGrid


@dataclass
class SurfaceField:
    """Real scalar field on the horizontal Nx x Ny grid."""

    values: np.ndarray
    grid: SpectralGrid

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.hshape:
            raise GridMismatch(
                f"surface field shape {self.values.shape} != {self.grid.hshape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("surface field has non-finite entries")

    def copy(self):
        return SurfaceField(self.values.copy(), self.grid)

    def __add__(self, other):
        self.grid.check_same(other.grid)
        return SurfaceField(self.values + other.values, self.grid)

    def __sub__(self, other):
        self.grid.check_same(other.grid)
        return SurfaceField(self.values - other.values, self.grid)

    def __mul__(self, scalar):
        return SurfaceField(self.values * float(scalar), self.grid)

    __rmul__ = __mul__


@dataclass
class StripField:
    """Real scalar field on the flattened strip (Nx x Ny x Nz)."""

    values: np.ndarray
    grid: SpectralGrid

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.sshape:
            raise GridMismatch(
                f"strip field shape {self.values.shape} != {self.grid.sshape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("strip field has non-finite entries")

    def copy(self):
        return StripField(self.values.copy(), self.grid)

    def surface(self):
        """Trace at z = 0."""
        return SurfaceField(self.values[:, :, 0].copy(), self.grid)

    def bottom(self):
        """Trace at z = -1."""
        return SurfaceField(self.values[:, :, -1].copy(), self.grid)


def zeros(grid):
    return SurfaceField(np.zeros(grid.hshape), grid)


def from_function(grid, fn):
    """Sample fn(x, y) on the horizontal grid."""
    return SurfaceField(np.asarray(fn(grid.X, grid.Y), dtype=float), grid)


# ---------------------------------------------------------------------------
# SplitMix64 counter stream
# ---------------------------------------------------------------------------

_MASK = np.uint64(0xFFFFFFFFFFFFFFFF)


def splitmix64(seed, n):
    """First n outputs of the SplitMix64 stream started at ``seed``.

    state_{i+1} = state_i + 0x9E3779B97F4A7C15 (mod 2^64); each output is
    z = state_{i+1}; z ^= z >> 30; z *= 0xBF58476D1CE4E5B9; z ^= z >> 27;
    z *= 0x94D049BB133111EB; z ^= z >> 31.
    """
    with np.errstate(over="ignore"):
        inc = np.uint64(0x9E3779B97F4A7C15)
        state = (np.uint64(seed) + inc * np.arange(1, n + 1, dtype=np.uint64))
        z = state
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9) & _MASK
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB) & _MASK
        z = z ^ (z >> np.uint64(31))
    return z


def uniforms(seed, n):
    """n doubles in [0, 1) from the SplitMix64 stream (53-bit mantissa)."""
    return (splitmix64(seed, n) >> np.uint64(11)).astype(float) / float(1 << 53)


def random_band_limited(grid, seed, kmax=8, amplitude=1.0, zero_x_mean=False):
    """Seeded real band-limited field, portable across implementations.

    Recipe: walk integer mode indices jx in -kmax..kmax, jy in -kmax..kmax
    (row-major, jx outer), skipping (0, 0) and any index outside the grid,
    keeping one representative per conjugate pair (jx > 0, or jx == 0 and
    jy > 0).  For the p-th kept pair draw two consecutive uniforms (u1, u2)
    from ``uniforms(seed, ...)`` and set the spectral coefficient

        c = sqrt(-2 ln(1 - u1)) * exp(2 pi i u2) * exp(-(j/kmax)^2)

    with j = sqrt(jx^2 + jy^2); the conjugate mode gets conj(c).  The field
    is the inverse FFT scaled so that its rms is ``amplitude``.
    """
    Nx, Ny = grid.Nx, grid.Ny
    pairs = []
    for jx in range(-kmax, kmax + 1):
        for jy in range(-kmax, kmax + 1):
            if jx == 0 and jy == 0:
                continue
            if abs(jx) >= Nx // 2 or abs(jy) >= Ny // 2:
                continue
            if not (jx > 0 or (jx == 0 and jy > 0)):
                continue
            pairs.append((jx, jy))
    u = uniforms(seed, 2 * len(pairs))
    spec = np.zeros((Nx, Ny), dtype=complex)
    for p, (jx, jy) in enumerate(pairs):
        u1, u2 = u[2 * p], u[2 * p + 1]
        r = np.sqrt(-2.0 * np.log1p(-u1))
        env = np.exp(-(jx * jx + jy * jy) / float(kmax * kmax))
        c = r * np.exp(2j * np.pi * u2) * env
        if zero_x_mean and jx == 0:
            c = 0.0
        spec[jx % Nx, jy % Ny] = c
        spec[(-jx) % Nx, (-jy) % Ny] = np.conj(c)
    vals = np.fft.ifft2(spec).real * (Nx * Ny)
    rms = np.sqrt(np.mean(vals ** 2))
    if rms > 0:
        vals *= amplitude / rms
    return SurfaceField(vals, grid)


def resample(field, new_grid):
    """Spectral injection onto a finer grid with the same periods (exact
    for band-limited data)."""
    g, G = field.grid, new_grid
    if (g.Lx, g.Ly) != (G.Lx, G.Ly):
        raise GridMismatch("resample requires identical periods")
    if G.Nx < g.Nx or G.Ny < g.Ny:
        raise GridMismatch("resample only refines")
    spec = np.fft.fft2(field.values) / (g.Nx * g.Ny)
    out = np.zeros((G.Nx, G.Ny), dtype=complex)
    jx = np.fft.fftfreq(g.Nx, d=1.0 / g.Nx).astype(int)
    jy = np.fft.fftfreq(g.Ny, d=1.0 / g.Ny).astype(int)
    for a, ja in enumerate(jx):
        out[ja % G.Nx, jy % G.Ny] += spec[a, np.arange(g.Ny)]
    vals = np.fft.ifft2(out).real * (G.Nx * G.Ny)
    return SurfaceField(vals, G)
