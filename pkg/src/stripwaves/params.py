"""Scaling-regime parameters.

The toolkit evolves one family of nondimensionalized systems parameterized
by an amplitude ratio ``epsilon``, a dispersion ratio ``mu`` and a
transverse wavelength ratio ``gamma``.  Two named regimes are used
throughout:

* standard long-wave regime:   mu = epsilon, gamma = sqrt(epsilon)
* degenerate (Bond ~ 1/3):     epsilon = mu**2, gamma = mu,
  with Bond number alpha = 1/3 + mu*theta

The anisotropic frequency used by all scaled operators is
|xi^gamma| = sqrt(xi1**2 + gamma**2 * xi2**2) and the scaled horizontal
gradient is (d/dx, gamma d/dy).
"""

from dataclasses import dataclass
import math


@dataclass(frozen=True)
class ScaleParams:
    """Regime parameters (epsilon, alpha, gamma, mu, theta)."""

    epsilon: float
    alpha: float
    gamma: float
    mu: float
    theta: float = 0.0

    def __post_init__(self):
        if not (0.0 < self.epsilon <= 1.0):
            raise ValueError(f"epsilon must be in (0, 1], got {self.epsilon}")
        if self.alpha <= 0.0:
            raise ValueError(f"alpha (Bond number) must be > 0, got {self.alpha}")
        if not (0.0 < self.gamma <= 1.0):
            raise ValueError(f"gamma must be in (0, 1], got {self.gamma}")
        if not (0.0 < self.mu <= 1.0):
            raise ValueError(f"mu must be in (0, 1], got {self.mu}")

    @classmethod
    def standard(cls, epsilon, alpha):
        """Weakly transverse long-wave regime: mu = eps, gamma = sqrt(eps)."""
        return cls(epsilon=epsilon, alpha=alpha, gamma=math.sqrt(epsilon),
                   mu=epsilon)

    @classmethod
    def degenerate(cls, eps, theta):
        """Near-critical Bond regime: amplitude eps**2, gamma = mu = eps.

        ``eps`` is the small parameter of the degenerate scaling; the Bond
        number is pinned to 1/3 + eps*theta.
        """
        return cls(epsilon=eps ** 2, alpha=1.0 / 3.0 + eps * theta,
                   gamma=eps, mu=eps, theta=theta)

    @classmethod
    def general(cls, epsilon, alpha, gamma, mu):
        return cls(epsilon=epsilon, alpha=alpha, gamma=gamma, mu=mu)

    @property
    def is_standard(self):
        return (math.isclose(self.mu, self.epsilon)
                and math.isclose(self.gamma ** 2, self.epsilon, rel_tol=1e-12))

    @property
    def is_degenerate(self):
        return (math.isclose(self.epsilon, self.mu ** 2)
                and math.isclose(self.gamma, self.mu))

    @property
    def sqrt_mu(self):
        return math.sqrt(self.mu)

    @property
    def rho_coeff(self):
        """Coefficient of |grad zeta|^2 inside the surface metric.

        rho(zeta) = sqrt(1 + rho_coeff * |grad^gamma zeta|^2); equals
        epsilon**3 in the standard regime.
        """
        return self.epsilon ** 2 * self.mu
