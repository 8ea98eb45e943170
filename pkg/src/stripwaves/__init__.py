"""Pseudo-spectral toolkit for weakly transverse capillary-gravity waves
on a periodic strip: Dirichlet-Neumann machinery, nonlinear and
linearized evolution, KP limit solvers, and a verification harness."""

from .errors import (AdmissibilityViolation, FrameMismatch, GridMismatch,
                     NegativeEnergy, NegativeRadicand, NonConvergence,
                     NonzeroXMean, SnapshotFormatError, StepRejected)
from .fields import StripField, SurfaceField, from_function, \
    random_band_limited, zeros
from .grid import SpectralGrid
from .params import ScaleParams

__all__ = [
    "AdmissibilityViolation", "FrameMismatch", "GridMismatch",
    "NegativeEnergy", "NegativeRadicand", "NonConvergence", "NonzeroXMean",
    "ScaleParams", "SnapshotFormatError", "SpectralGrid", "StepRejected",
    "StripField", "SurfaceField", "from_function", "random_band_limited",
    "zeros",
]

__version__ = "0.1.0"
