"""
FvK Plate Energy Module

Discrete Foppl-von Karman functional

    F_h(u, w) = h int J(D(u, w)) + h^3/12 int J(D^2 w) - h int g w - h oint f_h . u

with f_h = h^alpha f, its exact gradient with respect to nodal values, the
epsilon-scaled and limit energies, and the prestressed functional used for
relaxation studies.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field

from .exceptions import FvKConfigError, FvKNumericalError
from .grid import (
    BoundarySpec,
    Grid,
    ScalarField,
    VectorField2,
    grad_scalar,
    hessian_scalar,
    project_bc_grad,
    satisfies_bc,
    strain_adjoint,
    stretching,
    sym_grad_vector,
    rigid_basis,
)
from .material import Material, Sym2, energy_density, energy_density_grad

logger = logging.getLogger(__name__)

TRACTION_MODES = ("none", "uniform_stress", "normal_pressure", "per_edge", "explicit")

EdgeLoad = Union[float, Tuple[float, float]]


@dataclass(frozen=True)
class LoadSpec:
    """
    In-plane boundary traction f, transverse load g and load exponent alpha

    The effective traction entering F_h is h^alpha f. Build with the
    classmethods rather than the raw constructor.
    """
    traction_mode: str = "none"
    stress: Optional[Sym2] = None
    edges: Dict[str, EdgeLoad] = field(default_factory=dict)
    traction: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None
    transverse: Optional[Union[float, np.ndarray, Callable]] = None
    alpha: float = 0.0

    def __post_init__(self):
        if self.traction_mode not in TRACTION_MODES:
            raise FvKConfigError(f"Unknown traction mode {self.traction_mode!r}")
        if self.alpha < 0:
            raise FvKConfigError(f"Load exponent alpha must be >= 0, got {self.alpha}")

    @classmethod
    def none(cls, alpha: float = 0.0) -> "LoadSpec":
        return cls("none", alpha=alpha)

    @classmethod
    def uniform_stress(cls, stress: Sym2, alpha: float = 0.0, transverse=None) -> "LoadSpec":
        """Traction f = S n of a constant stress S, integrated through the discrete divergence theorem."""
        return cls("uniform_stress", stress=Sym2(float(stress.a11), float(stress.a12), float(stress.a22)),
                   transverse=transverse, alpha=alpha)

    @classmethod
    def normal_pressure(cls, f: float, alpha: float = 0.0, transverse=None) -> "LoadSpec":
        """Uniform normal traction f n (f > 0 pulls outward)."""
        return cls("normal_pressure", stress=Sym2.identity(float(f)), transverse=transverse, alpha=alpha)

    @classmethod
    def per_edge(cls, edges: Dict[str, EdgeLoad], alpha: float = 0.0, transverse=None) -> "LoadSpec":
        """Constant traction per named edge: a scalar p means p n, a pair is a fixed vector."""
        return cls("per_edge", edges=dict(edges), transverse=transverse, alpha=alpha)

    @classmethod
    def explicit(cls, traction: Callable, alpha: float = 0.0, transverse=None) -> "LoadSpec":
        """traction(points (k, 2), normals (k, 2)) -> (k, 2) sampled at boundary nodes."""
        return cls("explicit", traction=traction, transverse=transverse, alpha=alpha)

    def with_alpha(self, alpha: float) -> "LoadSpec":
        return LoadSpec(self.traction_mode, self.stress, dict(self.edges), self.traction, self.transverse, alpha)

    def scale(self, factor: float) -> "LoadSpec":
        """Same load multiplied by factor (transverse load included)."""
        stress = None if self.stress is None else self.stress * factor
        edges = {k: (factor * v if np.isscalar(v) else tuple(factor * np.asarray(v))) for k, v in self.edges.items()}
        traction = None
        if self.traction is not None:
            base = self.traction
            traction = lambda p, n: factor * np.asarray(base(p, n))
        transverse = self.transverse
        if callable(transverse):
            base_g = transverse
            transverse = lambda x1, x2: factor * np.asarray(base_g(x1, x2))
        elif transverse is not None:
            transverse = factor * np.asarray(transverse)
        return LoadSpec(self.traction_mode, stress, edges, traction, transverse, self.alpha)

    def describe(self) -> Dict[str, object]:
        record: Dict[str, object] = {"traction_mode": self.traction_mode, "alpha": self.alpha}
        if self.stress is not None:
            record["stress"] = [float(self.stress.a11), float(self.stress.a12), float(self.stress.a22)]
        if self.edges:
            record["edges"] = {k: (float(v) if np.isscalar(v) else [float(x) for x in v]) for k, v in self.edges.items()}
        record["transverse"] = self.transverse is not None
        return record

    # ------------------------------------------------------------------
    # discrete load vectors
    # ------------------------------------------------------------------

    def inplane_vector(self, grid: Grid) -> VectorField2:
        """
        Nodal vector b with oint f . u = b . u (unscaled f)

        Raises:
            FvKConfigError: If an edge name is unknown
        """
        if self.traction_mode == "none":
            return grid.zeros_vector()
        if self.traction_mode in ("uniform_stress", "normal_pressure"):
            # oint (S n) . u = int S : E(u) for constant S; the quadrature of the
            # right side keeps b equilibrated exactly and agrees with the
            # boundary trapezoid for linear u on rectangles
            q = grid.weights
            S = self.stress
            weighted = Sym2(q * S.a11, q * S.a12, q * S.a22)
            return strain_adjoint(grid, weighted)

        b = grid.zeros_vector()
        if self.traction_mode == "per_edge":
            for name, value in self.edges.items():
                if name not in grid.edges:
                    raise FvKConfigError(f"Load references unknown edge {name!r}; available: {sorted(grid.edges)}")
                e = grid.edges[name]
                if np.isscalar(value):
                    f = float(value) * e.normals
                else:
                    f = np.tile(np.asarray(value, dtype=float), (len(e.nodes), 1))
                np.add.at(b[0], e.nodes, e.weights * f[:, 0])
                np.add.at(b[1], e.nodes, e.weights * f[:, 1])
            return b

        for e in grid.edges.values():
            pts = np.stack([grid.x1[e.nodes], grid.x2[e.nodes]], axis=1)
            f = np.asarray(self.traction(pts, e.normals), dtype=float)
            np.add.at(b[0], e.nodes, e.weights * f[:, 0])
            np.add.at(b[1], e.nodes, e.weights * f[:, 1])
        return b

    def transverse_vector(self, grid: Grid) -> ScalarField:
        """Nodal vector c with int g w = c . w."""
        if self.transverse is None:
            return grid.zeros_scalar()
        if callable(self.transverse):
            g = grid.sample(self.transverse)
        else:
            g = np.broadcast_to(np.asarray(self.transverse, dtype=float), (grid.n,))
        return grid.weights * g

    def is_equilibrated(self, grid: Grid, rtol: float = 1e-8) -> bool:
        """Whether the discrete traction does no work on rigid motions."""
        b = self.inplane_vector(grid)
        scale = float(np.linalg.norm(b))
        if scale == 0.0:
            return True
        basis = rigid_basis(grid).reshape(3, -1)
        work = basis @ b.reshape(-1)
        norms = np.linalg.norm(basis, axis=1)
        return bool(np.all(np.abs(work) <= rtol * scale * norms))

    def has_transverse(self) -> bool:
        return self.transverse is not None


class EnergyBreakdown(BaseModel):
    """Parts of the discrete FvK functional."""
    membrane: float = Field(..., description="h int J(D(u, w))")
    bending: float = Field(..., description="h^3/12 int J(D^2 w)")
    load_work_inplane: float = Field(..., description="h oint f_h . u")
    load_work_transverse: float = Field(..., description="h int g w")
    total: float = Field(..., description="membrane + bending - both load works")

    @classmethod
    def compose(cls, membrane: float, bending: float, load_work_inplane: float, load_work_transverse: float) -> "EnergyBreakdown":
        return cls(
            membrane=membrane,
            bending=bending,
            load_work_inplane=load_work_inplane,
            load_work_transverse=load_work_transverse,
            total=membrane + bending - load_work_inplane - load_work_transverse,
        )


def _check_finite(value: float, what: str) -> float:
    if not np.isfinite(value):
        logger.error(f"Non-finite {what}: {value}")
        raise FvKNumericalError(f"Non-finite {what}")
    return float(value)


# ----------------------------------------------------------------------
# raw integrals (no thickness factors)
# ----------------------------------------------------------------------

def _membrane_integral(grid: Grid, u: VectorField2, w: ScalarField, m: Material) -> Tuple[float, Sym2, np.ndarray]:
    """Return int J(D), the weighted stress q J'(D) and Dw."""
    dw = grad_scalar(grid, w)
    D = sym_grad_vector(grid, u) + 0.5 * Sym2.outer(dw)
    q = grid.weights
    value = float(np.dot(q, energy_density(D, m)))
    stress = energy_density_grad(D, m)
    return value, Sym2(q * stress.a11, q * stress.a12, q * stress.a22), dw


def _membrane_w_gradient(grid: Grid, weighted_stress: Sym2, dw: np.ndarray) -> ScalarField:
    S = weighted_stress
    return grid.D1.T @ (S.a11 * dw[0] + S.a12 * dw[1]) + grid.D2.T @ (S.a12 * dw[0] + S.a22 * dw[1])


def _bending_integral(grid: Grid, w: ScalarField, m: Material) -> Tuple[float, ScalarField]:
    """Return int J(D^2 w) and its gradient."""
    H = hessian_scalar(grid, w)
    q = grid.weights
    value = float(np.dot(q, energy_density(H, m)))
    M = energy_density_grad(H, m)
    grad = grid.H11.T @ (q * M.a11) + grid.H22.T @ (q * M.a22) + 2.0 * (grid.H12.T @ (q * M.a12))
    return value, grad


# ----------------------------------------------------------------------
# public energies
# ----------------------------------------------------------------------

def membrane_energy(grid: Grid, u: VectorField2, w: ScalarField, m: Material) -> float:
    """h int J(D(u, w))"""
    value, _, _ = _membrane_integral(grid, u, w, m)
    return _check_finite(m.thickness * value, "membrane energy")


def bending_energy(grid: Grid, w: ScalarField, m: Material) -> float:
    """h^3/12 int J(D^2 w)"""
    value, _ = _bending_integral(grid, w, m)
    return _check_finite(m.thickness ** 3 / 12.0 * value, "bending energy")


def stress_field(grid: Grid, u: VectorField2, w: ScalarField, m: Material) -> Sym2:
    """Membrane stress J'(D(u, w)) per node."""
    return energy_density_grad(stretching(grid, u, w), m)


def load_factor(m: Material, load: LoadSpec) -> float:
    """h^alpha, the factor turning f into f_h."""
    return m.thickness ** load.alpha


def total_energy(
    grid: Grid,
    u: VectorField2,
    w: ScalarField,
    m: Material,
    load: LoadSpec,
    bc: Optional[BoundarySpec] = None,
) -> EnergyBreakdown:
    """
    Discrete FvK functional with its breakdown

    Args:
        grid: Grid
        u: In-plane displacement (2, N)
        w: Transverse displacement (N,)
        m: Material
        load: Boundary traction and transverse load
        bc: Boundary conditions; w is expected to satisfy them already

    Returns:
        EnergyBreakdown
    """
    u = grid.check_vector(u)
    w = grid.check_scalar(w)
    if bc is not None and not satisfies_bc(grid, w, bc):
        logger.warning(f"total_energy called with w violating {bc.bc_class}")

    h = m.thickness
    membrane = h * _membrane_integral(grid, u, w, m)[0]
    bending = h ** 3 / 12.0 * _bending_integral(grid, w, m)[0]
    work_f = h * load_factor(m, load) * float(np.sum(load.inplane_vector(grid) * u))
    work_g = h * float(np.dot(load.transverse_vector(grid), w))
    breakdown = EnergyBreakdown.compose(membrane, bending, work_f, work_g)
    _check_finite(breakdown.total, "total energy")
    return breakdown


def energy_gradient(
    grid: Grid,
    u: VectorField2,
    w: ScalarField,
    m: Material,
    load: LoadSpec,
    bc: Optional[BoundarySpec] = None,
) -> Tuple[VectorField2, ScalarField]:
    """
    Exact gradient of total_energy with respect to nodal values

    Constrained w degrees of freedom are projected out through project_bc_grad.

    Returns:
        (gradient in u (2, N), gradient in w (N,))
    """
    u = grid.check_vector(u)
    w = grid.check_scalar(w)
    h = m.thickness

    _, stress, dw = _membrane_integral(grid, u, w, m)
    _, bend_grad = _bending_integral(grid, w, m)

    grad_u = h * strain_adjoint(grid, stress) - h * load_factor(m, load) * load.inplane_vector(grid)
    grad_w = h * _membrane_w_gradient(grid, stress, dw) + h ** 3 / 12.0 * bend_grad
    grad_w = grad_w - h * load.transverse_vector(grid)

    if not (np.all(np.isfinite(grad_u)) and np.all(np.isfinite(grad_w))):
        logger.error("Non-finite energy gradient")
        raise FvKNumericalError("Non-finite energy gradient")
    if bc is not None:
        grad_w = project_bc_grad(grid, grad_w, bc)
    return grad_u, grad_w


# ----------------------------------------------------------------------
# in-plane reference and scaled energies
# ----------------------------------------------------------------------

def _reference_key(m: Material, load: LoadSpec) -> tuple:
    stress = None if load.stress is None else (float(load.stress.a11), float(load.stress.a12), float(load.stress.a22))
    edges = tuple(sorted(
        (name, float(v) if np.isscalar(v) else tuple(float(x) for x in v)) for name, v in load.edges.items()
    ))
    # the traction callable is held by the key, so its identity cannot be reused
    return (m.young, m.poisson, m.thickness, load.traction_mode, stress, edges, load.traction, load.alpha)


def inplane_reference(grid: Grid, m: Material, load: LoadSpec):
    """
    min F_{h,0} with its minimizer, cached on the grid per material and traction

    Returns:
        (u_star, min_value)
    """
    key = _reference_key(m, load)
    cache = grid.__dict__.setdefault("_inplane", {})
    if key not in cache:
        # solve imports this module
        from .solve import solve_inplane
        cache[key] = solve_inplane(grid, m, load)
    return cache[key]


def scaled_energy(
    grid: Grid,
    u: VectorField2,
    w: ScalarField,
    m: Material,
    load: LoadSpec,
    eps: float,
    min_ref: Optional[float] = None,
) -> float:
    """
    eps^-2 (F_h(u, eps w) - min F_{h,0})

    Args:
        min_ref: Reference minimum; computed by the in-plane solve when omitted
    """
    if eps <= 0:
        raise FvKConfigError(f"eps must be positive, got {eps}")
    if min_ref is None:
        min_ref = inplane_reference(grid, m, load)[1]
    total = total_energy(grid, u, eps * np.asarray(w, dtype=float), m, load).total
    return (total - min_ref) / eps ** 2


def scaled_gradient(
    grid: Grid,
    u: VectorField2,
    w: ScalarField,
    m: Material,
    load: LoadSpec,
    eps: float,
    bc: Optional[BoundarySpec] = None,
) -> Tuple[VectorField2, ScalarField]:
    """Gradient of scaled_energy in (u, w)."""
    gu, gw = energy_gradient(grid, u, eps * np.asarray(w, dtype=float), m, load, bc)
    return gu / eps ** 2, gw / eps


def limit_energy(grid: Grid, u_star: VectorField2, w: ScalarField, m: Material) -> float:
    """F_h^b(w) + (h/2) int J'(E(u*)) : Dw (x) Dw"""
    w = grid.check_scalar(w)
    S = energy_density_grad(sym_grad_vector(grid, u_star), m)
    dw = grad_scalar(grid, w)
    quadratic = S.ddot(Sym2.outer(dw))
    return bending_energy(grid, w, m) + 0.5 * m.thickness * integrate_nodal(grid, quadratic)


def limit_energy_gradient(grid: Grid, u_star: VectorField2, w: ScalarField, m: Material,
                          bc: Optional[BoundarySpec] = None) -> ScalarField:
    w = grid.check_scalar(w)
    h = m.thickness
    S = energy_density_grad(sym_grad_vector(grid, u_star), m)
    q = grid.weights
    _, bend_grad = _bending_integral(grid, w, m)
    dw = grad_scalar(grid, w)
    grad = h ** 3 / 12.0 * bend_grad + h * _membrane_w_gradient(grid, Sym2(q * S.a11, q * S.a12, q * S.a22), dw)
    if bc is not None:
        grad = project_bc_grad(grid, grad, bc)
    return grad


def integrate_nodal(grid: Grid, values: np.ndarray) -> float:
    return float(np.dot(grid.weights, values))


# ----------------------------------------------------------------------
# prestressed functional
# ----------------------------------------------------------------------

def prestressed_energy(
    grid: Grid,
    v: VectorField2,
    zeta: ScalarField,
    m: Material,
    load: LoadSpec,
    alpha: float,
    scaled: bool = False,
) -> float:
    """
    G_h(v, zeta) = h^alpha F_h^b(zeta) + h^(2 alpha + 1) (int J(D(v, zeta)) - oint f . v)

    The load work uses the unscaled traction f of ``load``.

    Args:
        scaled: Return h^(-2 alpha - 1) G_h instead

    Returns:
        Energy value
    """
    h = m.thickness
    membrane, _, _ = _membrane_integral(grid, v, zeta, m)
    work = float(np.sum(load.inplane_vector(grid) * grid.check_vector(v)))
    bending = bending_energy(grid, zeta, m)
    value = h ** alpha * bending + h ** (2 * alpha + 1) * (membrane - work)
    if scaled:
        value = value / h ** (2 * alpha + 1)
    return _check_finite(value, "prestressed energy")


def prestressed_gradient(
    grid: Grid,
    v: VectorField2,
    zeta: ScalarField,
    m: Material,
    alpha: float,
    bc: Optional[BoundarySpec] = None,
) -> ScalarField:
    """Gradient of prestressed_energy with respect to zeta (v frozen)."""
    h = m.thickness
    _, stress, dzeta = _membrane_integral(grid, v, zeta, m)
    _, bend_grad = _bending_integral(grid, zeta, m)
    grad = h ** alpha * h ** 3 / 12.0 * bend_grad + h ** (2 * alpha + 1) * _membrane_w_gradient(grid, stress, dzeta)
    if bc is not None:
        grad = project_bc_grad(grid, grad, bc)
    return grad


def gradient_check(
    grid: Grid,
    u: VectorField2,
    w: ScalarField,
    m: Material,
    load: LoadSpec,
    step: float = 1e-6,
) -> float:
    """
    Max relative error of energy_gradient against central differences of total_energy

    Every nodal degree of freedom is perturbed by step times the field scale.

    Returns:
        max |g - g_fd| / max |g|
    """
    u = grid.check_vector(u).copy()
    w = grid.check_scalar(w).copy()
    gu, gw = energy_gradient(grid, u, w, m, load)
    exact = np.concatenate([gu.reshape(-1), gw])
    x = np.concatenate([u.reshape(-1), w])
    dx = step * max(1.0, float(np.max(np.abs(x))))
    n = grid.n

    def energy_at(y):
        return total_energy(grid, y[: 2 * n].reshape(2, n), y[2 * n:], m, load).total

    approx = np.empty_like(exact)
    for i in range(len(x)):
        saved = x[i]
        x[i] = saved + dx
        up = energy_at(x)
        x[i] = saved - dx
        down = energy_at(x)
        x[i] = saved
        approx[i] = (up - down) / (2.0 * dx)
    scale = max(float(np.max(np.abs(exact))), 1e-300)
    error = float(np.max(np.abs(exact - approx))) / scale
    logger.debug(f"Gradient check on {len(x)} dofs: max relative error {error:.3e}")
    return error
