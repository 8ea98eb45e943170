"""Named analytic initial-data profiles for the experiment harness."""

import numpy as np

from .fields import SurfaceField, from_function, random_band_limited, zeros


def _gaussian(grid, sx, sy, x0=None, y0=None):
    x0 = grid.Lx / 2 if x0 is None else x0
    y0 = grid.Ly / 2 if y0 is None else y0
    return np.exp(-((grid.X - x0) / sx) ** 2 - ((grid.Y - y0) / sy) ** 2)


def rest(grid, params, seed=0, **kw):
    return zeros(grid), zeros(grid)


def single_mode(grid, params, seed=0, jx=1, jy=0, amplitude=1e-6,
                in_psi=False, **kw):
    phase = np.cos(2 * np.pi * jx * grid.X / grid.Lx
                   + 2 * np.pi * jy * grid.Y / grid.Ly)
    f = SurfaceField(amplitude * phase, grid)
    return (zeros(grid), f) if in_psi else (f, zeros(grid))


def gaussian_bump(grid, params, seed=0, amplitude=0.5, sx=None, sy=None, **kw):
    sx = grid.Lx / 12 if sx is None else sx
    sy = grid.Ly / 12 if sy is None else sy
    return SurfaceField(amplitude * _gaussian(grid, sx, sy), grid), zeros(grid)


def kp_packet(grid, params, seed=0, amplitude=0.25, sx=None, sy=None, **kw):
    """Localized zero-x-mean elevation (an exact x-derivative) with zero
    potential; both counter-propagating waves are excited."""
    sx = grid.Lx / 14 if sx is None else sx
    sy = grid.Ly / 10 if sy is None else sy
    gvals = _gaussian(grid, sx, sy)
    spec = np.fft.fft2(gvals)
    dvals = np.fft.ifft2(1j * grid.KX * spec).real
    peak = np.max(np.abs(dvals))
    zeta = SurfaceField(amplitude * dvals / peak, grid)
    return zeta, zeros(grid)


def random_band(grid, params, seed=0, kmax=6, amplitude=0.1,
                psi_amplitude=None, **kw):
    zeta = random_band_limited(grid, seed, kmax=kmax, amplitude=amplitude)
    pa = amplitude if psi_amplitude is None else psi_amplitude
    psi = random_band_limited(grid, seed + 1, kmax=kmax, amplitude=pa)
    return zeta, psi


RECIPES = {
    "rest": rest,
    "single_mode": single_mode,
    "gaussian_bump": gaussian_bump,
    "kp_packet": kp_packet,
    "random_band": random_band,
}


def make_initial(name, grid, params, seed=0, **kwargs):
    if name not in RECIPES:
        raise KeyError(f"unknown initial-data recipe {name!r}; "
                       f"available: {sorted(RECIPES)}")
    return RECIPES[name](grid, params, seed=seed, **kwargs)
