"""
FvK Plate Relaxation Module

Pointwise relaxation of the prestressed membrane density: the quartic g_A and
its closed-form minimum, the sampled convex envelope, the axisymmetric
prestress of an annulus under boundary pressures and the tensile/compressive
classification deciding between flat and wrinkled states.
"""

import logging
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.interpolate import RegularGridInterpolator
from scipy.spatial import ConvexHull

from .energy import LoadSpec, stress_field
from .exceptions import FvKConfigError
from .grid import Grid, ScalarField, VectorField2, grad_scalar, sym_grad_vector
from .material import Material, Sym2, coercivity_constants, eig_sym2

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GMinimum:
    value: float
    xi_star: np.ndarray


@dataclass
class EnvelopeSamples:
    """g_A and its convex envelope sampled on a square xi-grid (row-major, xi1 slow)."""
    xi1: np.ndarray
    xi2: np.ndarray
    g: np.ndarray
    envelope: np.ndarray
    resolution: int

    @property
    def minimum(self) -> float:
        return float(np.min(self.envelope))

    def interpolator(self) -> RegularGridInterpolator:
        axis = self.xi1.reshape(self.resolution, self.resolution)[:, 0]
        return RegularGridInterpolator((axis, axis), self.envelope.reshape(self.resolution, self.resolution))


def g_A(A: Sym2, nu: float, xi) -> np.ndarray:
    """
    |A + xi (x) xi|^2 + nu/(1 - nu) (Tr A + |xi|^2)^2

    Args:
        A: Symmetric tensor (or field broadcasting against xi)
        nu: Poisson ratio
        xi: Vector(s) with components on the last axis
    """
    xi = np.asarray(xi, dtype=float)
    x1, x2 = xi[..., 0], xi[..., 1]
    B = A + Sym2(x1 * x1, x1 * x2, x2 * x2)
    return B.ddot(B) + nu / (1.0 - nu) * (A.trace() + x1 * x1 + x2 * x2) ** 2


def min_gA(A: Sym2, nu: float) -> GMinimum:
    """
    Minimum of g_A over xi

    Tensile (nu lam2 + lam1 >= 0): g_A(0) at xi = 0. Otherwise (1 + nu) lam2^2 at
    xi = sqrt(-nu lam2 - lam1) v1. Vectorized over tensor fields.

    Raises:
        FvKConfigError: If nu is outside (-1, 1/2)
    """
    coercivity_constants(nu)
    eig = eig_sym2(A)
    lam1, lam2 = np.asarray(eig.lam1), np.asarray(eig.lam2)
    indicator = nu * lam2 + lam1
    tensile = np.asarray(indicator >= 0)
    zero = np.zeros(np.shape(lam1) + (2,))
    at_zero = g_A(A, nu, zero)
    value = np.where(tensile, at_zero, (1.0 + nu) * lam2 ** 2)
    length = np.sqrt(np.maximum(-indicator, 0.0))
    xi_star = np.where(tensile[..., None], 0.0, length[..., None] * np.asarray(eig.v1))
    if np.ndim(value) == 0:
        return GMinimum(float(value), xi_star)
    return GMinimum(value, xi_star)


def _needed_radius(A: Sym2, nu: float) -> float:
    eig = eig_sym2(A)
    return float(np.sqrt(max(0.0, -(nu * eig.lam2 + eig.lam1))))


def convexify_2d(A: Sym2, nu: float, radius: Optional[float] = None, resolution: int = 101) -> EnvelopeSamples:
    """
    Lower convex envelope of g_A sampled on [-radius, radius]^2

    The envelope is read off the lower facets of the convex hull of the lifted
    samples (xi1, xi2, g): at hull vertices it equals g, elsewhere the largest
    lower-facet plane.

    Args:
        A: Single symmetric tensor
        nu: Poisson ratio
        radius: Half-width of the sample box; default 2 (1 + |xi*|)
        resolution: Samples per axis

    Raises:
        FvKConfigError: If radius does not contain the minimizer xi*
    """
    needed = _needed_radius(A, nu)
    if radius is None:
        radius = 2.0 * (1.0 + needed)
    if radius <= needed:
        raise FvKConfigError(f"Envelope radius {radius} does not contain |xi*| = {needed}")
    if resolution < 5:
        raise FvKConfigError(f"Envelope resolution must be >= 5, got {resolution}")

    axis = np.linspace(-radius, radius, resolution)
    X1, X2 = np.meshgrid(axis, axis, indexing="ij")
    xi1, xi2 = X1.ravel(), X2.ravel()
    g = g_A(A, nu, np.stack([xi1, xi2], axis=-1))

    hull = ConvexHull(np.column_stack([xi1, xi2, g]))
    lower = hull.equations[hull.equations[:, 2] < -1e-12]
    envelope = g.copy()
    on_hull = np.zeros(len(g), dtype=bool)
    on_hull[np.unique(hull.simplices[hull.equations[:, 2] < -1e-12])] = True
    inside = np.flatnonzero(~on_hull)

    slopes = -lower[:, :2] / lower[:, 2:3]
    offsets = -lower[:, 3] / lower[:, 2]
    for start in range(0, len(inside), 512):
        chunk = inside[start:start + 512]
        planes = np.outer(xi1[chunk], slopes[:, 0]) + np.outer(xi2[chunk], slopes[:, 1]) + offsets
        envelope[chunk] = np.minimum(g[chunk], planes.max(axis=1))
    logger.debug(f"Envelope of g_A on radius {radius}: {len(inside)} interior samples, {len(lower)} lower facets")
    return EnvelopeSamples(xi1, xi2, g, envelope, resolution)


def envelope_at(A: Sym2, nu: float, xi, radius: Optional[float] = None, resolution: int = 61) -> float:
    """
    Convexified g_A at one point xi

    Tensile tensors have convex g_A, so the envelope is g_A itself there.
    """
    xi = np.asarray(xi, dtype=float)
    eig = eig_sym2(A)
    if nu * eig.lam2 + eig.lam1 >= 0:
        return float(g_A(A, nu, xi))
    if radius is None:
        radius = 2.0 * (1.0 + _needed_radius(A, nu))
    radius = max(radius, 1.05 * float(np.max(np.abs(xi))))
    samples = convexify_2d(A, nu, radius, resolution)
    return float(min(samples.interpolator()(xi[None, :])[0], g_A(A, nu, xi)))


# ----------------------------------------------------------------------
# annulus prestress
# ----------------------------------------------------------------------

class PrestressAnnulus(BaseModel):
    """
    Axisymmetric in-plane state v(x) = (a + b |x|^-2) x of an annulus under boundary pressures

    p1 acts on the inner circle, p2 on the outer one; a pressure p is the
    traction p n with n the outward normal of the annulus.
    """
    model_config = ConfigDict(frozen=True)

    R1: float = Field(..., gt=0, description="Inner radius")
    R2: float = Field(..., gt=0, description="Outer radius")
    p1: float = Field(..., description="Pressure on the inner circle")
    p2: float = Field(..., description="Pressure on the outer circle")
    a: float = Field(..., description="Dilation coefficient")
    b: float = Field(..., description="Coefficient of the |x|^-2 x term")

    @model_validator(mode="after")
    def _ordered(self):
        if not self.R1 < self.R2:
            raise ValueError(f"Annulus needs R1 < R2, got R1={self.R1}, R2={self.R2}")
        return self

    def strain_eigenvalues(self, r) -> Tuple[np.ndarray, np.ndarray]:
        """(radial a - b/r^2, tangential a + b/r^2)"""
        r = np.asarray(r, dtype=float)
        return self.a - self.b / r ** 2, self.a + self.b / r ** 2

    def displacement(self, grid: Grid) -> VectorField2:
        scale = self.a + self.b / grid.r ** 2
        return np.stack([scale * grid.x1, scale * grid.x2])

    def strain(self, grid: Grid) -> Sym2:
        """Analytic E(v) at the nodes."""
        radial, tangential = self.strain_eigenvalues(grid.r)
        c, s = np.cos(grid.theta), np.sin(grid.theta)
        return Sym2(radial * c * c + tangential * s * s, (radial - tangential) * c * s,
                    radial * s * s + tangential * c * c)

    def load(self, alpha: float = 0.0) -> LoadSpec:
        return LoadSpec.per_edge({"inner": self.p1, "outer": self.p2}, alpha=alpha)

    def case(self) -> str:
        """Sign pattern of the pressures."""
        if self.p1 <= self.p2 < 0:
            return "inner_dominant"
        if self.p2 <= self.p1 < 0:
            return "outer_dominant"
        if self.p1 < 0 <= self.p2:
            return "mixed"
        return "tensile"


def annulus_prestress(p1: float, p2: float, R1: float, R2: float, m: Material) -> PrestressAnnulus:
    """
    In-plane equilibrium of the annulus with traction p1 n on |x| = R1 and p2 n on |x| = R2

    a = (1 - nu)(p2 R2^2 - p1 R1^2) / (E (R2^2 - R1^2)),
    b = (1 + nu)(p2 - p1) R1^2 R2^2 / (E (R2^2 - R1^2)).

    Raises:
        FvKConfigError: If 0 < R1 < R2 fails
    """
    if not 0.0 < R1 < R2:
        raise FvKConfigError(f"Annulus needs 0 < R1 < R2, got R1={R1}, R2={R2}")
    E, nu = m.young, m.poisson
    span = E * (R2 ** 2 - R1 ** 2)
    a = (1.0 - nu) * (p2 * R2 ** 2 - p1 * R1 ** 2) / span
    b = (1.0 + nu) * (p2 - p1) * R1 ** 2 * R2 ** 2 / span
    return PrestressAnnulus(R1=R1, R2=R2, p1=p1, p2=p2, a=a, b=b)


def neumann_residual(prestress: PrestressAnnulus, grid: Grid, m: Material) -> Dict[str, float]:
    """
    Relative L2 mismatch of J'(E(v)) n against the applied traction on each circle

    v is sampled on the grid and differentiated discretely.
    """
    v = prestress.displacement(grid)
    S = stress_field(grid, v, grid.zeros_scalar(), m)
    residual = {}
    for name, p in (("inner", prestress.p1), ("outer", prestress.p2)):
        e = grid.edges[name]
        n1, n2 = e.normals[:, 0], e.normals[:, 1]
        t1 = S.a11[e.nodes] * n1 + S.a12[e.nodes] * n2
        t2 = S.a12[e.nodes] * n1 + S.a22[e.nodes] * n2
        mismatch = np.sum(e.weights * ((t1 - p * n1) ** 2 + (t2 - p * n2) ** 2))
        scale = np.sum(e.weights * p ** 2)
        residual[name] = float(np.sqrt(mismatch / scale)) if scale > 0 else float(np.sqrt(mismatch))
    return residual


def mixed_radius(prestress: PrestressAnnulus, m: Material) -> float:
    """
    Radius sqrt((1 - nu) b / ((1 + nu) a)) splitting compressive (inside) from tensile (outside) nodes

    Raises:
        FvKConfigError: Unless a > 0 and b > 0
    """
    if not (prestress.a > 0 and prestress.b > 0):
        raise FvKConfigError(f"Mixed radius needs a > 0 and b > 0, got a={prestress.a}, b={prestress.b}")
    nu = m.poisson
    return float(np.sqrt((1.0 - nu) * prestress.b / ((1.0 + nu) * prestress.a)))


# ----------------------------------------------------------------------
# classification and relaxed energies
# ----------------------------------------------------------------------

@dataclass
class StateClass:
    """Per-node smallest stress eigenvalue s1 and the tensile flag s1 >= 0."""
    s1: np.ndarray
    tensile: np.ndarray

    @property
    def flat_forced(self) -> bool:
        return bool(np.all(self.tensile))

    @property
    def wrinkling_admissible(self) -> bool:
        return bool(np.any(~self.tensile))

    def summary(self) -> Dict[str, object]:
        return {
            "nodes": int(self.s1.size),
            "tensile_nodes": int(np.count_nonzero(self.tensile)),
            "compressive_nodes": int(np.count_nonzero(~self.tensile)),
            "min_s1": float(np.min(self.s1)),
            "flat_forced": self.flat_forced,
            "wrinkling_admissible": self.wrinkling_admissible,
        }


def classify_state(strain: Sym2, m: Material) -> StateClass:
    """s1 = E/(1 - nu^2) (nu lam2 + lam1) per node; tensile iff s1 >= 0."""
    eig = eig_sym2(strain)
    s1 = m.young / (1.0 - m.poisson ** 2) * (m.poisson * np.asarray(eig.lam2) + np.asarray(eig.lam1))
    s1 = np.atleast_1d(s1)
    return StateClass(s1=s1, tensile=s1 >= 0)


def _density_factor(m: Material) -> float:
    return m.young / (8.0 * (1.0 + m.poisson))


def relaxed_energy(
    grid: Grid,
    v: VectorField2,
    zeta: ScalarField,
    m: Material,
    load: LoadSpec,
    resolution: int = 61,
) -> float:
    """
    int I**_v(x, D zeta) - oint f . v with I** = E/(8(1 + nu)) times the envelope of g_{2E(v)}

    Compressive nodes get a sampled envelope each; tensile nodes use g directly.
    """
    E2 = 2.0 * sym_grad_vector(grid, v)
    dzeta = grad_scalar(grid, zeta)
    nu = m.poisson
    values = g_A(E2, nu, dzeta.T)
    eig = eig_sym2(E2)
    compressive = np.flatnonzero(nu * np.asarray(eig.lam2) + np.asarray(eig.lam1) < 0)
    for node in compressive:
        A = Sym2(E2.a11[node], E2.a12[node], E2.a22[node])
        values[node] = envelope_at(A, nu, dzeta[:, node], resolution=resolution)
    logger.debug(f"Relaxed energy: {len(compressive)} of {grid.n} nodes convexified")
    work = float(np.sum(load.inplane_vector(grid) * v))
    return _density_factor(m) * float(np.dot(grid.weights, values)) - work


def relaxed_min_energy(grid: Grid, v: VectorField2, m: Material, load: LoadSpec) -> float:
    """
    int min_xi I_v(x, xi) - oint f . v, from the closed-form minimum of g_{2E(v)}

    A lower bound for the relaxed functional; it is attained by the wrinkling
    constructions on the annulus.
    """
    E2 = 2.0 * sym_grad_vector(grid, v)
    pointwise = min_gA(E2, m.poisson).value
    work = float(np.sum(load.inplane_vector(grid) * v))
    return _density_factor(m) * float(np.dot(grid.weights, pointwise)) - work
