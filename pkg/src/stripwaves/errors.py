"""Exception types shared across the toolkit."""


class StripwavesError(Exception):
    """Base class for all toolkit-specific failures."""


class GridMismatch(StripwavesError):
    """Two fields (or a field and an operator) live on incompatible grids."""


class AdmissibilityViolation(StripwavesError):
    """The fluid depth 1 + eps*zeta - eps*b dropped to (or below) the floor."""

    def __init__(self, h_min, h_floor=0.0):
        self.h_min = h_min
        self.h_floor = h_floor
        super().__init__(
            f"surface touches bottom: min depth {h_min:.6g} <= floor {h_floor:.6g}"
        )


class NonConvergence(StripwavesError):
    """The preconditioned Krylov iteration stalled."""

    def __init__(self, iterations, residual):
        self.iterations = iterations
        self.residual = residual
        super().__init__(
            f"elliptic solver stalled after {iterations} iterations "
            f"(relative residual {residual:.3e})"
        )


class StepRejected(StripwavesError):
    """A time step produced an energy jump beyond the configured tolerance."""


class NonzeroXMean(StripwavesError):
    """Data handed to the KP machinery is outside the zero-x-mean class."""


class NegativeRadicand(StripwavesError):
    """The principal-symbol radicand went negative (symbol assembly bug)."""


class NegativeEnergy(StripwavesError):
    """A quadratic energy form evaluated negative beyond tolerance."""


class FrameMismatch(StripwavesError):
    """Slow time tau and fast time t disagree at reconstruction."""


class SnapshotFormatError(StripwavesError):
    """A field snapshot file failed validation on load."""
