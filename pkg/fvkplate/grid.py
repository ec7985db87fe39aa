"""
FvK Plate Grid Module

Structured node-centred grids (rectangle, annulus) with sparse
finite-difference operators, trapezoidal quadrature, named boundary edges,
boundary-condition projectors and the rigid-motion projection.

Node ordering is C-order over (axis0, axis1): (x1, x2) on rectangles and
(r, theta) on annuli. A scalar field is an array of shape (N,), a vector field
an array of shape (2, N).
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, Optional, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import factorized

from .exceptions import FvKConfigError, FvKNumericalError
from .material import Sym2

logger = logging.getLogger(__name__)

ScalarField = np.ndarray
VectorField2 = np.ndarray
Sym2Field = Sym2

BC_CLASSES = ("A0", "A1", "A2")


def trapezoid_weights(n: int, step: float) -> np.ndarray:
    weights = np.full(n, step)
    weights[0] = weights[-1] = 0.5 * step
    return weights


def first_derivative_1d(n: int, step: float) -> sp.csr_matrix:
    """Central differences inside, second-order one-sided rows at both ends."""
    op = sp.diags([-np.ones(n - 1), np.ones(n - 1)], [-1, 1], shape=(n, n), format="lil")
    op[0, 0:3] = [-3.0, 4.0, -1.0]
    op[n - 1, n - 3:n] = [1.0, -4.0, 3.0]
    return (op / (2.0 * step)).tocsr()


def second_derivative_1d(n: int, step: float) -> sp.csr_matrix:
    op = sp.diags([np.ones(n - 1), -2.0 * np.ones(n), np.ones(n - 1)], [-1, 0, 1], shape=(n, n), format="lil")
    op[0, :] = 0.0
    op[n - 1, :] = 0.0
    if n >= 4:
        op[0, 0:4] = [2.0, -5.0, 4.0, -1.0]
        op[n - 1, n - 4:n] = [-1.0, 4.0, -5.0, 2.0]
    else:
        op[0, 0:3] = [1.0, -2.0, 1.0]
        op[n - 1, n - 3:n] = [1.0, -2.0, 1.0]
    return (op / step ** 2).tocsr()


def _cyclic_shift(n: int) -> sp.csr_matrix:
    # (S f)_j = f_{j+1 mod n}
    return sp.diags([np.ones(n - 1), np.ones(1)], [1, -(n - 1)], shape=(n, n), format="csr")


def _periodic_first(n: int, step: float) -> sp.csr_matrix:
    up = _cyclic_shift(n)
    return ((up - up.T) / (2.0 * step)).tocsr()


def _periodic_second(n: int, step: float) -> sp.csr_matrix:
    up = _cyclic_shift(n)
    return ((up + up.T - 2.0 * sp.eye(n)) / step ** 2).tocsr()


@dataclass(frozen=True)
class BoundaryEdge:
    """A named straight edge or circle of the grid boundary."""
    name: str
    nodes: np.ndarray
    weights: np.ndarray
    normals: np.ndarray          # (k, 2) outward unit normals
    inward: np.ndarray           # (k, 2) first and second inward neighbours
    along: np.ndarray            # (k, 2) neighbours along the edge, -1 when absent


class Grid:
    """
    Structured grid with cached differential operators

    Use ``Grid.rectangle`` or ``Grid.annulus`` to construct.
    """

    def __init__(self, kind: str, params: Dict[str, float], shape: Tuple[int, int]):
        self.kind = kind
        self.params = dict(params)
        self.shape = shape
        self.n = shape[0] * shape[1]
        self._projectors: Dict[Tuple[str, bytes], Callable] = {}
        self.edges: Dict[str, BoundaryEdge] = {}

    # ------------------------------------------------------------------
    # construction
    # ------------------------------------------------------------------

    @classmethod
    def rectangle(cls, x_range: Tuple[float, float], y_range: Tuple[float, float], nx: int, ny: int) -> "Grid":
        """
        Rectangle (x0, x1) x (y0, y1) sampled with nx x ny nodes

        Raises:
            FvKConfigError: If a resolution is below 3 or a range is empty
        """
        x0, x1 = map(float, x_range)
        y0, y1 = map(float, y_range)
        if nx < 3 or ny < 3:
            raise FvKConfigError(f"Rectangle grid needs at least 3 nodes per axis, got {nx}x{ny}")
        if not (x1 > x0 and y1 > y0):
            raise FvKConfigError(f"Empty rectangle {x_range} x {y_range}")

        grid = cls("rectangle", {"x0": x0, "x1": x1, "y0": y0, "y1": y1, "nx": nx, "ny": ny}, (nx, ny))
        xs = np.linspace(x0, x1, nx)
        ys = np.linspace(y0, y1, ny)
        dx, dy = xs[1] - xs[0], ys[1] - ys[0]
        grid.spacing = (dx, dy)
        grid.axis0, grid.axis1 = xs, ys
        X, Y = np.meshgrid(xs, ys, indexing="ij")
        grid.x1, grid.x2 = X.ravel(), Y.ravel()

        grid.weights = np.outer(trapezoid_weights(nx, dx), trapezoid_weights(ny, dy)).ravel()

        ix, iy = sp.eye(nx, format="csr"), sp.eye(ny, format="csr")
        d1x, d1y = first_derivative_1d(nx, dx), first_derivative_1d(ny, dy)
        grid.D1 = sp.kron(d1x, iy, format="csr")
        grid.D2 = sp.kron(ix, d1y, format="csr")
        grid.H11 = sp.kron(second_derivative_1d(nx, dx), iy, format="csr")
        grid.H22 = sp.kron(ix, second_derivative_1d(ny, dy), format="csr")
        grid.H12 = sp.kron(d1x, d1y, format="csr")

        index = np.arange(grid.n).reshape(nx, ny)

        def edge(name, nodes, weights, normal, inward1, inward2, along_prev, along_next):
            k = len(nodes)
            grid.edges[name] = BoundaryEdge(
                name=name,
                nodes=nodes,
                weights=weights,
                normals=np.tile(np.asarray(normal, dtype=float), (k, 1)),
                inward=np.stack([inward1, inward2], axis=1),
                along=np.stack([along_prev, along_next], axis=1),
            )

        def neighbours(line):
            prev = np.concatenate([[-1], line[:-1]])
            nxt = np.concatenate([line[1:], [-1]])
            return prev, nxt

        wy, wx = trapezoid_weights(ny, dy), trapezoid_weights(nx, dx)
        edge("left", index[0, :], wy, (-1.0, 0.0), index[1, :], index[2, :], *neighbours(index[0, :]))
        edge("right", index[-1, :], wy, (1.0, 0.0), index[-2, :], index[-3, :], *neighbours(index[-1, :]))
        edge("bottom", index[:, 0], wx, (0.0, -1.0), index[:, 1], index[:, 2], *neighbours(index[:, 0]))
        edge("top", index[:, -1], wx, (0.0, 1.0), index[:, -2], index[:, -3], *neighbours(index[:, -1]))
        grid._finish()
        logger.debug(f"Built rectangle grid {nx}x{ny} on {x_range}x{y_range}")
        return grid

    @classmethod
    def annulus(cls, R1: float, R2: float, nr: int, ntheta: int) -> "Grid":
        """
        Annulus R1 < |x| < R2 sampled with nr radial and ntheta periodic angular nodes

        Raises:
            FvKConfigError: If 0 < R1 < R2 fails or a resolution is below 3
        """
        R1, R2 = float(R1), float(R2)
        if not (0.0 < R1 < R2):
            raise FvKConfigError(f"Annulus requires 0 < R1 < R2, got R1={R1}, R2={R2}")
        if nr < 3 or ntheta < 3:
            raise FvKConfigError(f"Annulus grid needs at least 3 nodes per axis, got {nr}x{ntheta}")

        grid = cls("annulus", {"R1": R1, "R2": R2, "nr": nr, "ntheta": ntheta}, (nr, ntheta))
        rs = np.linspace(R1, R2, nr)
        thetas = 2.0 * np.pi * np.arange(ntheta) / ntheta
        dr, dtheta = rs[1] - rs[0], 2.0 * np.pi / ntheta
        grid.spacing = (dr, dtheta)
        grid.axis0, grid.axis1 = rs, thetas
        Rm, Tm = np.meshgrid(rs, thetas, indexing="ij")
        grid.r, grid.theta = Rm.ravel(), Tm.ravel()
        grid.x1, grid.x2 = grid.r * np.cos(grid.theta), grid.r * np.sin(grid.theta)

        grid.weights = np.outer(trapezoid_weights(nr, dr) * rs, np.full(ntheta, dtheta)).ravel()

        ir, it = sp.eye(nr, format="csr"), sp.eye(ntheta, format="csr")
        d1r, d2r = first_derivative_1d(nr, dr), second_derivative_1d(nr, dr)
        p1, p2 = _periodic_first(ntheta, dtheta), _periodic_second(ntheta, dtheta)
        Dr = sp.kron(d1r, it, format="csr")
        Dt = sp.kron(ir, p1, format="csr")
        Drr = sp.kron(d2r, it, format="csr")
        Dtt = sp.kron(ir, p2, format="csr")
        Drt = sp.kron(d1r, p1, format="csr")

        c, s = np.cos(grid.theta), np.sin(grid.theta)
        C, S = sp.diags(c), sp.diags(s)
        Rinv = sp.diags(1.0 / grid.r)
        Rinv2 = sp.diags(1.0 / grid.r ** 2)
        grid.D1 = (C @ Dr - S @ Rinv @ Dt).tocsr()
        grid.D2 = (S @ Dr + C @ Rinv @ Dt).tocsr()

        # polar Hessian mapped to Cartesian components
        radial_part = Rinv @ Dr + Rinv2 @ Dtt
        mixed_part = Rinv @ Drt - Rinv2 @ Dt
        grid.H11 = (sp.diags(c * c) @ Drr + sp.diags(s * s) @ radial_part - 2.0 * sp.diags(c * s) @ mixed_part).tocsr()
        grid.H22 = (sp.diags(s * s) @ Drr + sp.diags(c * c) @ radial_part + 2.0 * sp.diags(c * s) @ mixed_part).tocsr()
        grid.H12 = (sp.diags(c * s) @ (Drr - radial_part) + sp.diags(c * c - s * s) @ mixed_part).tocsr()

        index = np.arange(grid.n).reshape(nr, ntheta)
        for name, row, first, second, sign, radius in (
            ("inner", 0, 1, 2, -1.0, R1),
            ("outer", nr - 1, nr - 2, nr - 3, 1.0, R2),
        ):
            nodes = index[row, :]
            normals = sign * np.stack([np.cos(thetas), np.sin(thetas)], axis=1)
            grid.edges[name] = BoundaryEdge(
                name=name,
                nodes=nodes,
                weights=np.full(ntheta, radius * dtheta),
                normals=normals,
                inward=np.stack([index[first, :], index[second, :]], axis=1),
                along=np.stack([np.roll(nodes, 1), np.roll(nodes, -1)], axis=1),
            )
        grid._finish()
        logger.debug(f"Built annulus grid {nr}x{ntheta} on R1={R1}, R2={R2}")
        return grid

    def _finish(self) -> None:
        self.boundary_mask = np.zeros(self.n, dtype=bool)
        for e in self.edges.values():
            self.boundary_mask[e.nodes] = True
        self.area = float(np.sum(self.weights))

    # ------------------------------------------------------------------
    # helpers
    # ------------------------------------------------------------------

    @property
    def points(self) -> np.ndarray:
        return np.stack([self.x1, self.x2], axis=1)

    def describe(self) -> Dict[str, float]:
        """Grid record for the run summary."""
        return {"kind": self.kind, **self.params}

    def zeros_scalar(self) -> ScalarField:
        return np.zeros(self.n)

    def zeros_vector(self) -> VectorField2:
        return np.zeros((2, self.n))

    def check_scalar(self, w: ScalarField, name: str = "w") -> np.ndarray:
        w = np.asarray(w, dtype=float)
        if w.shape != (self.n,):
            raise FvKConfigError(f"Scalar field {name} has shape {w.shape}, grid expects ({self.n},)")
        if not np.all(np.isfinite(w)):
            raise FvKNumericalError(f"Scalar field {name} has non-finite values")
        return w

    def check_vector(self, u: VectorField2, name: str = "u") -> np.ndarray:
        u = np.asarray(u, dtype=float)
        if u.shape != (2, self.n):
            raise FvKConfigError(f"Vector field {name} has shape {u.shape}, grid expects (2, {self.n})")
        if not np.all(np.isfinite(u)):
            raise FvKNumericalError(f"Vector field {name} has non-finite values")
        return u

    def sample(self, func: Callable[[np.ndarray, np.ndarray], np.ndarray]) -> np.ndarray:
        """Evaluate func(x1, x2) at every node."""
        return np.broadcast_to(np.asarray(func(self.x1, self.x2), dtype=float), (self.n,)).copy()


# ----------------------------------------------------------------------
# differential operators
# ----------------------------------------------------------------------

def grad_scalar(grid: Grid, w: ScalarField) -> VectorField2:
    """Dw as a (2, N) array."""
    w = grid.check_scalar(w)
    return np.stack([grid.D1 @ w, grid.D2 @ w])


def hessian_scalar(grid: Grid, w: ScalarField) -> Sym2:
    """D^2 w as a Sym2 field."""
    w = grid.check_scalar(w)
    return Sym2(grid.H11 @ w, grid.H12 @ w, grid.H22 @ w)


def sym_grad_vector(grid: Grid, u: VectorField2) -> Sym2:
    """Linearized strain E(u) = (Du + Du^T)/2."""
    u = grid.check_vector(u)
    return Sym2(grid.D1 @ u[0], 0.5 * (grid.D2 @ u[0] + grid.D1 @ u[1]), grid.D2 @ u[1])


def stretching(grid: Grid, u: VectorField2, w: ScalarField) -> Sym2:
    """Stretching tensor D(u, w) = E(u) + Dw (x) Dw / 2."""
    strain = sym_grad_vector(grid, u)
    dw = grad_scalar(grid, w)
    return strain + 0.5 * Sym2.outer(dw)


def divergence(grid: Grid, u: VectorField2) -> ScalarField:
    u = grid.check_vector(u)
    return grid.D1 @ u[0] + grid.D2 @ u[1]


def integrate(grid: Grid, f: ScalarField) -> float:
    """Trapezoidal integral over the domain (polar metric included on annuli)."""
    f = np.asarray(f, dtype=float)
    return float(np.dot(grid.weights, f))


def boundary_integrate(grid: Grid, f: ScalarField, edges: Optional[Iterable[str]] = None) -> float:
    """
    Trapezoidal integral of nodal values over boundary edges

    Args:
        grid: Grid
        f: Nodal field (only boundary entries are read)
        edges: Edge names, all edges when omitted

    Returns:
        Integral with respect to arc length
    """
    f = np.asarray(f, dtype=float)
    names = list(edges) if edges is not None else list(grid.edges)
    total = 0.0
    for name in names:
        e = grid.edges[name]
        total += float(np.dot(e.weights, f[e.nodes]))
    return total


# ----------------------------------------------------------------------
# boundary conditions
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class BoundarySpec:
    """Boundary class A0 (clamped), A1 (supported) or A2 (free) with the node mask of Gamma."""
    bc_class: str
    gamma: Optional[np.ndarray] = field(default=None, compare=False)

    def __post_init__(self):
        if self.bc_class not in BC_CLASSES:
            raise FvKConfigError(f"Unknown boundary class {self.bc_class!r}, expected one of {BC_CLASSES}")
        if self.bc_class != "A2" and (self.gamma is None or not np.any(self.gamma)):
            raise FvKConfigError(f"Boundary class {self.bc_class} requires a nonempty Gamma")

    @classmethod
    def free(cls) -> "BoundarySpec":
        return cls("A2", None)

    @classmethod
    def on_edges(cls, grid: Grid, bc_class: str, names: Iterable[str]) -> "BoundarySpec":
        return cls(bc_class, gamma_from_edges(grid, names))

    @classmethod
    def from_predicate(cls, grid: Grid, bc_class: str, predicate: Callable) -> "BoundarySpec":
        return cls(bc_class, gamma_from_predicate(grid, predicate))

    @property
    def is_free(self) -> bool:
        return self.bc_class == "A2"

    def describe(self, grid: Grid) -> Dict[str, object]:
        count = 0 if self.gamma is None else int(np.count_nonzero(self.gamma))
        return {"class": self.bc_class, "gamma_nodes": count}


def gamma_from_edges(grid: Grid, names: Iterable[str]) -> np.ndarray:
    mask = np.zeros(grid.n, dtype=bool)
    for name in names:
        if name not in grid.edges:
            raise FvKConfigError(f"Grid has no edge {name!r}; available: {sorted(grid.edges)}")
        mask[grid.edges[name].nodes] = True
    return mask


def gamma_from_predicate(grid: Grid, predicate: Callable[[np.ndarray, np.ndarray], np.ndarray]) -> np.ndarray:
    """Boundary nodes whose coordinates satisfy predicate(x1, x2)."""
    selected = np.asarray(predicate(grid.x1, grid.x2), dtype=bool)
    return grid.boundary_mask & np.broadcast_to(selected, (grid.n,))


def _constraint_matrix(grid: Grid, bc: BoundarySpec) -> sp.csr_matrix:
    gamma = np.asarray(bc.gamma, dtype=bool)
    if gamma.shape != (grid.n,):
        raise FvKConfigError(f"Gamma mask has shape {gamma.shape}, grid expects ({grid.n},)")
    if np.any(gamma & ~grid.boundary_mask):
        raise FvKConfigError("Gamma mask selects interior nodes")

    rows, cols, vals = [], [], []
    nodes = np.flatnonzero(gamma)
    for k, p in enumerate(nodes):
        rows.append(k)
        cols.append(p)
        vals.append(1.0)
    count = len(nodes)

    if bc.bc_class == "A0":
        for e in grid.edges.values():
            for p, (q1, q2), (prev, nxt) in zip(e.nodes, e.inward, e.along):
                if not gamma[p]:
                    continue
                # p must belong to a segment of Gamma along this edge
                if not ((prev >= 0 and gamma[prev]) or (nxt >= 0 and gamma[nxt])):
                    continue
                # already implied by value rows
                if gamma[q1] and gamma[q2]:
                    continue
                rows.extend([count, count, count])
                cols.extend([p, q1, q2])
                vals.extend([-3.0, 4.0, -1.0])
                count += 1
    return sp.csr_matrix((vals, (rows, cols)), shape=(count, grid.n))


def _projector(grid: Grid, bc: BoundarySpec) -> Callable[[np.ndarray], np.ndarray]:
    key = (bc.bc_class, np.packbits(np.asarray(bc.gamma, dtype=bool)).tobytes())
    cached = grid._projectors.get(key)
    if cached is not None:
        return cached

    C = _constraint_matrix(grid, bc)
    solve = factorized((C @ C.T).tocsc())

    def project(values: np.ndarray) -> np.ndarray:
        return values - C.T @ solve(C @ values)

    grid._projectors[key] = project
    logger.debug(f"Factorized {bc.bc_class} projector with {C.shape[0]} constraint rows")
    return project


def apply_bc(grid: Grid, w: ScalarField, bc: BoundarySpec) -> ScalarField:
    """
    Orthogonal projection of w onto the admissible set of bc

    A1 zeroes w on Gamma; A0 also constrains the first two inward layers so the
    one-sided normal derivative vanishes; A2 is the identity.
    """
    w = grid.check_scalar(w)
    if bc.is_free:
        return w.copy()
    return _projector(grid, bc)(w)


def project_bc_grad(grid: Grid, g: ScalarField, bc: BoundarySpec) -> ScalarField:
    """Remove the gradient components normal to the admissible set of bc."""
    g = grid.check_scalar(g, name="gradient")
    if bc.is_free:
        return g.copy()
    return _projector(grid, bc)(g)


def satisfies_bc(grid: Grid, w: ScalarField, bc: BoundarySpec, atol: float = 1e-9) -> bool:
    if bc.is_free:
        return True
    w = grid.check_scalar(w)
    scale = max(1.0, float(np.max(np.abs(w))))
    return bool(np.max(np.abs(w - apply_bc(grid, w, bc))) <= atol * scale)


# ----------------------------------------------------------------------
# rigid motions
# ----------------------------------------------------------------------

def rigid_basis(grid: Grid) -> np.ndarray:
    q = grid.weights
    c1 = np.dot(q, grid.x1) / grid.area
    c2 = np.dot(q, grid.x2) / grid.area
    one, zero = np.ones(grid.n), np.zeros(grid.n)
    return np.stack([
        np.stack([one, zero]),
        np.stack([zero, one]),
        np.stack([-(grid.x2 - c2), grid.x1 - c1]),
    ])


def rigid_project(grid: Grid, u: VectorField2) -> VectorField2:
    """
    L2 projection (quadrature inner product) of u onto infinitesimal rigid motions

    Args:
        grid: Grid
        u: Vector field (2, N)

    Returns:
        The rigid part of u
    """
    u = grid.check_vector(u)
    basis = rigid_basis(grid)
    q = grid.weights
    gram = np.einsum("acn,bcn,n->ab", basis, basis, q)
    rhs = np.einsum("acn,cn,n->a", basis, u, q)
    coeffs = np.linalg.solve(gram, rhs)
    return np.einsum("a,acn->cn", coeffs, basis)


def remove_rigid(grid: Grid, u: VectorField2) -> VectorField2:
    return u - rigid_project(grid, u)


def remove_rigid_dual(grid: Grid, g: VectorField2) -> VectorField2:
    """
    Remove the rigid part of a nodal gradient in the dual norm sqrt(sum g^2 / q)

    The transpose of remove_rigid, so directions built from the result stay
    q-orthogonal to rigid motions.
    """
    g = grid.check_vector(g, name="gradient")
    q = grid.weights
    return g - q * rigid_project(grid, g / q)


def dump_fields_csv(path: str, grid: Grid, u: Optional[VectorField2] = None, w: Optional[ScalarField] = None) -> None:
    """Write nodal fields as CSV with header x1,x2,u1,u2,w in node order."""
    u = grid.zeros_vector() if u is None else grid.check_vector(u)
    w = grid.zeros_scalar() if w is None else grid.check_scalar(w)
    data = np.column_stack([grid.x1, grid.x2, u[0], u[1], w])
    np.savetxt(path, data, delimiter=",", header="x1,x2,u1,u2,w", comments="", fmt="%.17g")
    logger.info(f"Wrote {grid.n} nodes to {path}")


def strain_adjoint(grid: Grid, S: Sym2) -> VectorField2:
    """
    Transpose of the strain operator: the vector field b with b.u = sum(S : E(u))

    Args:
        grid: Grid
        S: Sym2 field (already multiplied by quadrature weights where intended)

    Returns:
        (2, N) array
    """
    return np.stack([
        grid.D1.T @ S.a11 + grid.D2.T @ S.a12,
        grid.D2.T @ S.a22 + grid.D1.T @ S.a12,
    ])
