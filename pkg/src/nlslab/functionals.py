"""Scalar functionals of the model and the first-variation residual.

All gradient energies here use the quadratic form of the flux Laplacian,
<-Lap u, u>, so that first_variation_S is the exact discrete gradient of
S_omega.  The stencil-based grad_norm in the grid module is a separate
diagnostic norm.  Fields are expected to decay toward r_max; fields with
a significant boundary trace pick up the Dirichlet edge penalty.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .grid import RadialField, grad_norm_sq_energy, laplacian, norm_L2, norm_Lq


@dataclass(frozen=True)
class ModelParams:
    """Dimension, subcritical power, and frequency of the model.

    Admissibility demands p + 1 strictly between 2 + 4/d and 2 + 4/(d-2),
    which forces the scaling exponent s_p = d/2 - 2/(p-1) into (0, 1).
    """

    d: int
    p: float
    omega: float

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 3:
            raise DomainError(f"dimension must be an integer >= 3, got {self.d}")
        object.__setattr__(self, "d", int(self.d))
        object.__setattr__(self, "p", float(self.p))
        object.__setattr__(self, "omega", float(self.omega))
        lo = 1.0 + 4.0 / self.d
        hi = 1.0 + 4.0 / (self.d - 2)
        if not (lo < self.p < hi):
            raise DomainError(
                f"power p = {self.p} outside the admissible range "
                f"({lo}, {hi}) for d = {self.d}")
        if not (0.0 < self.omega < math.inf):
            raise DomainError(f"frequency must be positive, got {self.omega}")

    @property
    def s_p(self) -> float:
        return self.d / 2.0 - 2.0 / (self.p - 1.0)

    @property
    def two_star(self) -> float:
        """Critical exponent 2* = 2 + 4/(d-2)."""
        return 2.0 + 4.0 / (self.d - 2)

    @property
    def two_star_lower(self) -> float:
        """Mass-scaling exponent 2_* = 2 + 4/d."""
        return 2.0 + 4.0 / self.d

    def with_omega(self, omega: float) -> "ModelParams":
        return ModelParams(self.d, self.p, omega)


def mass(u: RadialField) -> float:
    """M(u) = ||u||^2 / 2."""
    return 0.5 * norm_L2(u) ** 2


def _powers(u: RadialField, prm: ModelParams):
    """(||u||_{p+1}^{p+1}, ||u||_{2*}^{2*})."""
    return (norm_Lq(u, prm.p + 1.0) ** (prm.p + 1.0),
            norm_Lq(u, prm.two_star) ** prm.two_star)


def hamiltonian(u: RadialField, prm: ModelParams) -> float:
    """H(u) = ||grad u||^2/2 - ||u||_{p+1}^{p+1}/(p+1) - ||u||_{2*}^{2*}/2*."""
    sub, crit = _powers(u, prm)
    return (0.5 * grad_norm_sq_energy(u)
            - sub / (prm.p + 1.0) - crit / prm.two_star)


def K(u: RadialField, prm: ModelParams) -> float:
    """Scale-derivative (virial) functional.

    K(u) = ||grad u||^2 - d(p-1)/(2(p+1)) ||u||_{p+1}^{p+1} - ||u||_{2*}^{2*};
    it is d/dl S_omega(l^{d/2} u(l r)) at l = 1, and 8 K drives the second
    time derivative of the second moment.
    """
    sub, crit = _powers(u, prm)
    coef = prm.d * (prm.p - 1.0) / (2.0 * (prm.p + 1.0))
    return grad_norm_sq_energy(u) - coef * sub - crit


def S_omega(u: RadialField, prm: ModelParams) -> float:
    """Action S_omega = omega M + H."""
    return prm.omega * mass(u) + hamiltonian(u, prm)


def I_omega(u: RadialField, prm: ModelParams) -> float:
    """I_omega = S_omega - (2/(d(p-1))) K; the subcritical term drops out,
    leaving omega/2 ||u||^2 + (s_p/d)||grad u||^2 + ((1-s_p)/d)||u||_{2*}^{2*}."""
    return S_omega(u, prm) - 2.0 / (prm.d * (prm.p - 1.0)) * K(u, prm)


def J_omega(u: RadialField, prm: ModelParams) -> float:
    """J_omega = S_omega - K/2; the gradient term drops out."""
    return S_omega(u, prm) - 0.5 * K(u, prm)


def N_omega(u: RadialField, prm: ModelParams) -> float:
    """Nehari functional omega||u||^2 + ||grad u||^2 - ||u||_{p+1}^{p+1}
    - ||u||_{2*}^{2*}; vanishes on stationary solutions."""
    sub, crit = _powers(u, prm)
    return (prm.omega * norm_L2(u) ** 2 + grad_norm_sq_energy(u) - sub - crit)


def dagger_functionals(u: RadialField, prm: ModelParams) -> dict:
    """Subcritical-only companions {H, K, S}: the critical term suppressed."""
    sub = norm_Lq(u, prm.p + 1.0) ** (prm.p + 1.0)
    grad2 = grad_norm_sq_energy(u)
    h = 0.5 * grad2 - sub / (prm.p + 1.0)
    k = grad2 - prm.d * (prm.p - 1.0) / (2.0 * (prm.p + 1.0)) * sub
    return {"H": h, "K": k, "S": prm.omega * mass(u) + h}


def ddagger_functionals(u: RadialField, prm: ModelParams) -> dict:
    """Critical-only companions {H, K, I}: the subcritical term suppressed.

    I = H - K/2* = (1/2 - 1/2*) ||grad u||^2 = ||grad u||^2 / d.
    """
    crit = norm_Lq(u, prm.two_star) ** prm.two_star
    grad2 = grad_norm_sq_energy(u)
    return {"H": 0.5 * grad2 - crit / prm.two_star,
            "K": grad2 - crit,
            "I": (0.5 - 1.0 / prm.two_star) * grad2}


def second_moment(u: RadialField) -> float:
    """Variance integral int |x|^2 |u|^2 dx."""
    g = u.grid
    return float(np.sum(g.w * g.r**2 * np.abs(u.values) ** 2))


def nonlinearity(u_values: np.ndarray, prm: ModelParams) -> np.ndarray:
    """|u|^{p-1} u + |u|^{2*-2} u, elementwise (zero maps to exact zero)."""
    a = np.abs(u_values)
    return (a ** (prm.p - 1.0) + a ** (prm.two_star - 2.0)) * u_values


def nonlinearity_ratio(u_values: np.ndarray, prm: ModelParams) -> np.ndarray:
    """|u|^{p-1} + |u|^{2*-2}, the potential multiplying u in the
    nonlinearity (elementwise; zero maps to exact zero)."""
    a = np.abs(u_values)
    return a ** (prm.p - 1.0) + a ** (prm.two_star - 2.0)


def nonlinearity_prime(u_values: np.ndarray, prm: ModelParams) -> np.ndarray:
    """d/du of the real nonlinearity: p|u|^{p-1} + (2*-1)|u|^{2*-2}."""
    a = np.abs(u_values)
    return (prm.p * a ** (prm.p - 1.0)
            + (prm.two_star - 1.0) * a ** (prm.two_star - 2.0))


def first_variation_S(u: RadialField, prm: ModelParams) -> RadialField:
    """Gradient of S_omega: the stationary-equation residual
    omega u - Lap u - |u|^{p-1}u - |u|^{2*-2}u."""
    resid = prm.omega * u.values - laplacian(u).values - nonlinearity(u.values, prm)
    return RadialField(u.grid, resid)
