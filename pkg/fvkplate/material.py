"""
FvK Plate Material Module

Pointwise constitutive algebra of the isotropic plate: the quadratic energy
density J, its derivative J', closed-form eigen-decomposition of symmetric
2x2 tensors and the coercivity constants of J.

Every operation accepts scalar or array entries; a ``Sym2`` whose entries are
arrays of a common shape is a tensor field and all functions act nodewise.
"""

import logging
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from .exceptions import FvKConfigError

logger = logging.getLogger(__name__)

Scalar = Union[float, np.ndarray]


class Material(BaseModel):
    """Isotropic plate material and thickness scale (s0 = 1)."""
    model_config = ConfigDict(frozen=True)

    young: float = Field(..., gt=0, description="Young modulus E")
    poisson: float = Field(..., gt=-1.0, lt=0.5, description="Poisson ratio nu")
    thickness: float = Field(..., gt=0, description="Non-dimensional thickness scale h")

    def with_thickness(self, thickness: float) -> "Material":
        return Material(young=self.young, poisson=self.poisson, thickness=thickness)

    @property
    def plane_modulus(self) -> float:
        """E / (1 - nu^2)"""
        return self.young / (1.0 - self.poisson ** 2)


@dataclass(frozen=True)
class Sym2:
    """Symmetric 2x2 tensor stored by its three independent entries."""
    a11: Scalar
    a12: Scalar
    a22: Scalar

    @classmethod
    def zeros(cls, shape=()) -> "Sym2":
        if shape == ():
            return cls(0.0, 0.0, 0.0)
        return cls(np.zeros(shape), np.zeros(shape), np.zeros(shape))

    @classmethod
    def identity(cls, scale: Scalar = 1.0) -> "Sym2":
        return cls(scale, 0.0 * scale, scale)

    @classmethod
    def outer(cls, a, b=None) -> "Sym2":
        """Symmetrized outer product of two vectors given as (x, y) pairs."""
        if b is None:
            b = a
        return cls(a[0] * b[0], 0.5 * (a[0] * b[1] + a[1] * b[0]), a[1] * b[1])

    @classmethod
    def from_matrix(cls, M) -> "Sym2":
        M = np.asarray(M, dtype=float)
        return cls(M[..., 0, 0], 0.5 * (M[..., 0, 1] + M[..., 1, 0]), M[..., 1, 1])

    def as_matrix(self) -> np.ndarray:
        a11, a12, a22 = np.broadcast_arrays(
            np.asarray(self.a11, dtype=float),
            np.asarray(self.a12, dtype=float),
            np.asarray(self.a22, dtype=float),
        )
        row1 = np.stack([a11, a12], axis=-1)
        row2 = np.stack([a12, a22], axis=-1)
        return np.stack([row1, row2], axis=-2)

    def trace(self) -> Scalar:
        return self.a11 + self.a22

    def det(self) -> Scalar:
        return self.a11 * self.a22 - self.a12 ** 2

    def ddot(self, other: "Sym2") -> Scalar:
        """Double contraction A:B."""
        return self.a11 * other.a11 + 2.0 * self.a12 * other.a12 + self.a22 * other.a22

    def norm(self) -> Scalar:
        """Frobenius norm |A|."""
        return np.sqrt(self.ddot(self))

    def rotate(self, Q) -> "Sym2":
        """Q^T A Q for a single 2x2 matrix Q."""
        Q = np.asarray(Q, dtype=float)
        return Sym2.from_matrix(Q.T @ self.as_matrix() @ Q)

    def __add__(self, other: "Sym2") -> "Sym2":
        return Sym2(self.a11 + other.a11, self.a12 + other.a12, self.a22 + other.a22)

    def __sub__(self, other: "Sym2") -> "Sym2":
        return Sym2(self.a11 - other.a11, self.a12 - other.a12, self.a22 - other.a22)

    def __neg__(self) -> "Sym2":
        return Sym2(-self.a11, -self.a12, -self.a22)

    def __mul__(self, scale) -> "Sym2":
        return Sym2(scale * self.a11, scale * self.a12, scale * self.a22)

    __rmul__ = __mul__


@dataclass(frozen=True)
class EigPair:
    """Ordered eigen-decomposition lam1 <= lam2 with unit eigenvectors v1, v2 (last axis = component)."""
    lam1: Scalar
    lam2: Scalar
    v1: np.ndarray
    v2: np.ndarray


def energy_density(A: Sym2, m: Material) -> Scalar:
    """
    Isotropic membrane/bending density J(A)

    Args:
        A: Symmetric tensor (or tensor field)
        m: Material

    Returns:
        E/(2(1-nu^2)) * (Tr(A)^2 - 2(1-nu) det A)
    """
    nu = m.poisson
    return m.young / (2.0 * (1.0 - nu ** 2)) * (A.trace() ** 2 - 2.0 * (1.0 - nu) * A.det())


def energy_density_grad(A: Sym2, m: Material) -> Sym2:
    """
    Derivative J'(A) = E/(1+nu) A + E nu/(1-nu^2) Tr(A) I

    Args:
        A: Symmetric tensor (or tensor field)
        m: Material

    Returns:
        Stress-like tensor with J'(A):B the directional derivative of J at A along B
    """
    E, nu = m.young, m.poisson
    shear = E / (1.0 + nu)
    bulk = E * nu / (1.0 - nu ** 2) * A.trace()
    return Sym2(shear * A.a11 + bulk, shear * A.a12, shear * A.a22 + bulk)


def strain_from_stress(S: Sym2, m: Material) -> Sym2:
    """Inverse of J': the tensor A with J'(A) = S."""
    E, nu = m.young, m.poisson
    tr = S.trace()
    return Sym2(
        ((1.0 + nu) * S.a11 - nu * tr) / E,
        (1.0 + nu) * S.a12 / E,
        ((1.0 + nu) * S.a22 - nu * tr) / E,
    )


def _orient(vx: np.ndarray, vy: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    # first nonzero component positive
    flip = (vx < -1e-15) | ((np.abs(vx) <= 1e-15) & (vy < 0))
    sign = np.where(flip, -1.0, 1.0)
    vx = np.where(np.abs(vx) <= 1e-15, 0.0, vx * sign)
    return vx, vy * sign


def eig_sym2(A: Sym2) -> EigPair:
    """
    Closed-form ordered eigen-decomposition of a symmetric 2x2 tensor

    Multiples of the identity return the canonical axes v1 = (1, 0), v2 = (0, 1).

    Args:
        A: Symmetric tensor (or tensor field)

    Returns:
        EigPair with lam1 <= lam2 and oriented unit eigenvectors
    """
    a11 = np.asarray(A.a11, dtype=float)
    a12 = np.asarray(A.a12, dtype=float)
    a22 = np.asarray(A.a22, dtype=float)
    a11, a12, a22 = np.broadcast_arrays(a11, a12, a22)

    mean = 0.5 * (a11 + a22)
    half_diff = 0.5 * (a11 - a22)
    radius = np.hypot(half_diff, a12)
    lam1 = mean - radius
    lam2 = mean + radius

    theta = 0.5 * np.arctan2(2.0 * a12, a11 - a22)
    c, s = np.cos(theta), np.sin(theta)
    degenerate = radius == 0.0

    v2x, v2y = _orient(np.where(degenerate, 0.0, c), np.where(degenerate, 1.0, s))
    v1x, v1y = _orient(np.where(degenerate, 1.0, -s), np.where(degenerate, 0.0, c))

    v1 = np.stack([v1x, v1y], axis=-1)
    v2 = np.stack([v2x, v2y], axis=-1)
    if lam1.ndim == 0:
        return EigPair(float(lam1), float(lam2), v1, v2)
    return EigPair(lam1, lam2, v1, v2)


def coercivity_constants(nu: float) -> Tuple[float, float]:
    """
    Coercivity constants (c_nu, C_nu) with c_nu E/2 |A|^2 <= J(A) <= C_nu E/2 |A|^2

    Args:
        nu: Poisson ratio in (-1, 1/2)

    Returns:
        (min{1/(1-nu), 1/(1+nu)}, max{1/(1-nu), 1/(1+nu)})

    Raises:
        FvKConfigError: If nu is outside (-1, 1/2)
    """
    if not (-1.0 < nu < 0.5):
        raise FvKConfigError(f"Poisson ratio must lie in (-1, 1/2), got {nu}")
    lo, hi = 1.0 / (1.0 - nu), 1.0 / (1.0 + nu)
    return min(lo, hi), max(lo, hi)
