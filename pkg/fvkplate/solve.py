"""
FvK Plate Solve Module

Constrained minimization of the discrete FvK and prestressed functionals,
linear in-plane solves, Poincare-Wirtinger constant of the grid and the 1D
buckling eigenproblems behind the analytic critical thicknesses.
"""

import logging
import time
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from pydantic import BaseModel, Field

from .context import run_context
from .core import get_config
from .energy import (
    LoadSpec,
    energy_gradient,
    load_factor,
    prestressed_energy,
    prestressed_gradient,
    scaled_energy,
    scaled_gradient,
    total_energy,
)
from .exceptions import FvKConfigError, FvKConvergenceError, FvKNumericalError
from .grid import (
    BoundarySpec,
    Grid,
    ScalarField,
    VectorField2,
    apply_bc,
    first_derivative_1d,
    project_bc_grad,
    remove_rigid,
    remove_rigid_dual,
    rigid_basis,
    satisfies_bc,
    second_derivative_1d,
    strain_adjoint,
    stretching,
    trapezoid_weights,
)
from .material import Material, Sym2, coercivity_constants, energy_density, energy_density_grad

logger = logging.getLogger(__name__)

BUCKLING_VARIANTS = ("clamped", "supported", "free")


class SolveOptions(BaseModel):
    """Descent settings for minimize and minimize_prestressed."""
    max_iters: int = Field(2000, ge=1, description="Iteration cap")
    grad_tol: float = Field(1e-8, gt=0, description="Stop when the dual gradient norm falls below this")
    armijo: float = Field(1e-4, gt=0, lt=1, description="Sufficient decrease constant")
    backtrack: float = Field(0.5, gt=0, lt=1, description="Step reduction factor")
    max_backtracks: int = Field(60, ge=1, description="Trial steps per line search")
    memory: int = Field(10, ge=0, description="L-BFGS pairs kept; 0 gives plain gradient descent")
    precondition: bool = Field(True, description="Precondition minimize with the flat-state stiffness")
    energy_floor: Optional[float] = Field(None, description="Declare divergence below this energy")
    log_every: int = Field(100, ge=1, description="Log progress every this many iterations")


class SolveReport(BaseModel):
    """Outcome of a descent run."""
    iterations: int = Field(..., description="Accepted steps")
    final_residual: float = Field(..., description="sqrt(sum g^2 / q) at the last iterate")
    energy_history: List[float] = Field(default_factory=list, description="Energy after each accepted step")
    converged: bool = Field(..., description="Residual below grad_tol")
    diverging: bool = Field(False, description="Energy fell below the floor")
    message: str = Field("", description="Why the run stopped")
    elapsed: float = Field(0.0, description="Wall time in seconds")

    def summary(self) -> dict:
        """
        Record for summary.json with the history truncated to the configured limit

        Wall time stays out; it is reported through the run context timings.
        """
        limit = int(get_config()["history_limit"])
        record = self.model_dump(exclude={"elapsed"})
        if len(self.energy_history) > limit:
            record["energy_history"] = self.energy_history[-limit:]
            record["history_truncated"] = True
        return record


@dataclass
class BucklingMode:
    """Critical value k and mode shape sampled at x."""
    k: float
    x: np.ndarray
    shape: np.ndarray


@dataclass
class PSCheck:
    """One element of a candidate Palais-Smale sequence."""
    eps: float
    energy: float
    residual: float
    bounded: bool
    decreasing: bool

    @property
    def passed(self) -> bool:
        return self.bounded and self.decreasing


# ----------------------------------------------------------------------
# descent core
# ----------------------------------------------------------------------

# relative size of rounding noise in an energy evaluation
_ENERGY_NOISE = 1e-12


def _descend(
    objective: Callable[[np.ndarray], Tuple[float, np.ndarray]],
    x0: np.ndarray,
    residual_norm: Callable[[np.ndarray], float],
    opts: SolveOptions,
    floor: float,
    precondition: Optional[Callable[[np.ndarray], np.ndarray]] = None,
) -> Tuple[np.ndarray, SolveReport]:
    """
    Monotone L-BFGS with Armijo backtracking

    objective returns the energy and its gradient already projected onto the
    admissible directions, so every iterate stays admissible. precondition
    maps a gradient to an admissible direction (an approximate inverse
    Hessian) and seeds the two-loop recursion. A failed quasi-Newton line
    search falls back to a (preconditioned) steepest descent step.
    """
    started = time.time()
    apply = precondition if precondition is not None else (lambda v: v)
    x = x0.copy()
    f, g = objective(x)
    history = [f]
    s_list: List[np.ndarray] = []
    y_list: List[np.ndarray] = []
    steepest = apply(g)
    step_hint = 1.0 if precondition is not None else 1.0 / max(float(np.linalg.norm(g)), 1e-300)
    res = residual_norm(g)
    message = "max_iters reached"
    diverging = False
    iterations = 0

    for it in range(opts.max_iters):
        if res <= opts.grad_tol:
            message = "gradient tolerance reached"
            break

        if opts.memory > 0 and s_list:
            d = -_two_loop(g, s_list, y_list, apply)
            t0 = 1.0
        else:
            d = -steepest
            t0 = step_hint
        slope = float(np.dot(g, d))
        if slope >= 0:
            s_list.clear()
            y_list.clear()
            d, t0 = -steepest, step_hint
            slope = float(np.dot(g, d))

        accepted = _line_search(objective, x, f, d, slope, t0, opts)
        if accepted is None and s_list:
            logger.debug(f"Quasi-Newton step failed at iteration {it}, retrying with steepest descent")
            s_list.clear()
            y_list.clear()
            d = -steepest
            accepted = _line_search(objective, x, f, d, float(np.dot(g, d)), step_hint, opts)
        if accepted is None:
            message = "line search failed"
            break

        t, x_new, f_new, g_new = accepted
        s, y = x_new - x, g_new - g
        sy = float(np.dot(s, y))
        if opts.memory > 0 and sy > 1e-12 * np.linalg.norm(s) * np.linalg.norm(y):
            s_list.append(s)
            y_list.append(y)
            if len(s_list) > opts.memory:
                s_list.pop(0)
                y_list.pop(0)
        steepest = apply(g_new)
        if opts.memory == 0 or not s_list:
            step_hint = 2.0 * t * float(np.linalg.norm(d)) / max(float(np.linalg.norm(steepest)), 1e-300)

        x, f, g = x_new, f_new, g_new
        history.append(f)
        iterations = it + 1
        res = residual_norm(g)
        if (it + 1) % opts.log_every == 0:
            logger.info(f"iter {it + 1}: energy={f:.10e} residual={res:.3e}")
        if f < floor:
            diverging = True
            message = f"energy {f:.6e} fell below floor {floor:.6e}"
            logger.warning(message)
            break

    report = SolveReport(
        iterations=iterations,
        final_residual=res,
        energy_history=history,
        converged=res <= opts.grad_tol,
        diverging=diverging,
        message=message,
        elapsed=time.time() - started,
    )
    return x, report


def _two_loop(
    g: np.ndarray,
    s_list: List[np.ndarray],
    y_list: List[np.ndarray],
    apply: Callable[[np.ndarray], np.ndarray],
) -> np.ndarray:
    q = g.copy()
    alphas = []
    for s, y in zip(reversed(s_list), reversed(y_list)):
        rho = 1.0 / np.dot(y, s)
        a = rho * np.dot(s, q)
        alphas.append((rho, a))
        q -= a * y
    s, y = s_list[-1], y_list[-1]
    # H0 = gamma M with gamma = s.y / y.My
    q = np.dot(s, y) / np.dot(y, apply(y)) * apply(q)
    for (s, y), (rho, a) in zip(zip(s_list, y_list), reversed(alphas)):
        b = rho * np.dot(y, q)
        q += (a - b) * s
    return q


def _line_search(objective, x, f, d, slope, t0, opts: SolveOptions):
    """
    Armijo backtracking

    Near a minimizer the decrease drops below the rounding noise of the
    energy; a step is then also taken when the energy is unchanged up to that
    noise and the directional derivative has shrunk.
    """
    t = t0
    noise = _ENERGY_NOISE * abs(f)
    for _ in range(opts.max_backtracks):
        x_new = x + t * d
        try:
            f_new, g_new = objective(x_new)
        except FvKNumericalError:
            t *= opts.backtrack
            continue
        if f_new <= f + opts.armijo * t * slope:
            return t, x_new, f_new, g_new
        if f_new <= f + noise:
            curvature = float(np.dot(g_new, d))
            if 0.9 * slope <= curvature <= -0.8 * slope:
                return t, x_new, f_new, g_new
        t *= opts.backtrack
    return None


def _default_floor(e0: float, explicit: Optional[float]) -> float:
    if explicit is not None:
        return explicit
    return -float(get_config()["energy_floor_factor"]) * abs(e0 + 1.0)


def _dual_norm(weights: np.ndarray, blocks: int) -> Callable[[np.ndarray], float]:
    q = np.tile(weights, blocks)

    def norm(g: np.ndarray) -> float:
        return float(np.sqrt(np.sum(g * g / q)))

    return norm


def _mean_gauge(grid: Grid, load: LoadSpec, bc: BoundarySpec) -> bool:
    if not bc.is_free:
        return False
    c = load.transverse_vector(grid)
    return abs(float(np.sum(c))) <= 1e-12 * max(1.0, float(np.sum(np.abs(c))))


# ----------------------------------------------------------------------
# minimization
# ----------------------------------------------------------------------

def random_init(grid: Grid, bc: BoundarySpec, amplitude: Optional[float] = None,
                seed: int = 0) -> Tuple[VectorField2, ScalarField]:
    """
    Seeded random initial guess (u, w) with w admissible for bc

    Args:
        amplitude: Noise amplitude relative to the domain diameter; defaults to the configured noise_amplitude
        seed: Seed for numpy's default_rng
    """
    if amplitude is None:
        amplitude = float(get_config()["noise_amplitude"])
    rng = np.random.default_rng(seed)
    diameter = float(np.hypot(np.ptp(grid.x1), np.ptp(grid.x2)))
    u = amplitude * diameter * rng.standard_normal((2, grid.n))
    w = amplitude * diameter * rng.standard_normal(grid.n)
    return u, apply_bc(grid, w, bc)


def _flat_preconditioner(
    grid: Grid,
    m: Material,
    load: LoadSpec,
    bc: BoundarySpec,
    rigid_gauge: bool,
    mean_gauge: bool,
) -> Callable[[np.ndarray], np.ndarray]:
    """
    Inverse of the block diagonal Hessian of F_h at the flat state

    The u block is h K; the w block is the bending stiffness plus the
    tension h^alpha S of a uniform load, clipped at zero. Small multiples of
    the mass matrix keep both blocks invertible on the gauge directions.
    """
    n = grid.n
    h, E = m.thickness, m.young
    diameter = float(np.hypot(np.ptp(grid.x1), np.ptp(grid.x2)))
    Q = sp.diags(grid.weights)

    K = membrane_stiffness(grid, m)
    solve_u = spla.factorized((h * (K + 1e-6 * E / diameter ** 2 * sp.block_diag([Q, Q]))).tocsc())

    tension = 0.0
    if load.stress is not None:
        S = load.stress
        smallest = 0.5 * (S.a11 + S.a22) - float(np.hypot(0.5 * (S.a11 - S.a22), S.a12))
        tension = max(load_factor(m, load) * smallest, 0.0)
    bending = h ** 3 / 12.0
    P_w = (
        bending * bending_stiffness(grid, m)
        + h * tension * (grid.D1.T @ Q @ grid.D1 + grid.D2.T @ Q @ grid.D2)
        + 1e-6 * bending * E / diameter ** 4 * Q
    )
    solve_w = spla.factorized(P_w.tocsc())

    def apply(g: np.ndarray) -> np.ndarray:
        du = solve_u(g[: 2 * n]).reshape(2, n)
        if rigid_gauge:
            du = remove_rigid(grid, du)
        dw = project_bc_grad(grid, solve_w(g[2 * n:]), bc)
        if mean_gauge:
            dw = dw - np.mean(dw)
        return np.concatenate([du.reshape(-1), dw])

    return apply


def minimize(
    grid: Grid,
    m: Material,
    load: LoadSpec,
    bc: BoundarySpec,
    init: Tuple[VectorField2, ScalarField],
    opts: Optional[SolveOptions] = None,
) -> Tuple[Tuple[VectorField2, ScalarField], SolveReport]:
    """
    Minimize the discrete FvK functional over admissible (u, w)

    Rigid motions of u are quotiented out when the traction is equilibrated,
    as is the mean of w for free plates without net transverse load. The
    gradient of u is gauged in the same dual norm the residual is measured in.

    Args:
        grid: Grid
        m: Material
        load: Boundary traction and transverse load
        bc: Boundary conditions for w
        init: Initial (u, w); w must satisfy bc
        opts: Descent settings

    Returns:
        ((u, w), SolveReport)

    Raises:
        FvKConfigError: If the initial w violates bc
    """
    opts = opts or SolveOptions()
    u0 = grid.check_vector(init[0], "u0")
    w0 = grid.check_scalar(init[1], "w0")
    if not satisfies_bc(grid, w0, bc):
        raise FvKConfigError(f"Initial w does not satisfy the {bc.bc_class} boundary conditions")

    n = grid.n
    rigid_gauge = load.is_equilibrated(grid)
    mean_gauge = _mean_gauge(grid, load, bc)
    if rigid_gauge:
        u0 = remove_rigid(grid, u0)
    if mean_gauge:
        w0 = w0 - np.mean(w0)

    def unpack(x):
        return x[: 2 * n].reshape(2, n), x[2 * n:]

    def objective(x):
        u, w = unpack(x)
        f = total_energy(grid, u, w, m, load).total
        gu, gw = energy_gradient(grid, u, w, m, load, bc)
        if rigid_gauge:
            gu = remove_rigid_dual(grid, gu)
        if mean_gauge:
            gw = gw - np.mean(gw)
        return f, np.concatenate([gu.reshape(-1), gw])

    x0 = np.concatenate([u0.reshape(-1), w0])
    e0 = total_energy(grid, u0, w0, m, load).total
    floor = _default_floor(e0, opts.energy_floor)
    precondition = None
    if opts.precondition:
        precondition = _flat_preconditioner(grid, m, load, bc, rigid_gauge, mean_gauge)
    logger.info(f"minimize: {grid.kind} grid {grid.shape}, {bc.bc_class}, E0={e0:.6e}")

    x, report = _descend(objective, x0, _dual_norm(grid.weights, 3), opts, floor, precondition)
    run_context.add_timing("minimize", report.elapsed)
    u, w = unpack(x)
    if rigid_gauge:
        u = remove_rigid(grid, u)
    logger.info(f"minimize finished: {report.message} after {report.iterations} iterations")
    return (u.copy(), w.copy()), report


def minimize_prestressed(
    grid: Grid,
    v: VectorField2,
    m: Material,
    load: LoadSpec,
    bc: BoundarySpec,
    zeta0: ScalarField,
    alpha: float,
    opts: Optional[SolveOptions] = None,
) -> Tuple[ScalarField, SolveReport]:
    """
    Minimize the prestressed functional over zeta with the in-plane field v frozen

    Returns:
        (zeta, SolveReport)
    """
    opts = opts or SolveOptions()
    v = grid.check_vector(v, "v")
    zeta0 = grid.check_scalar(zeta0, "zeta0")
    if not satisfies_bc(grid, zeta0, bc):
        raise FvKConfigError(f"Initial zeta does not satisfy the {bc.bc_class} boundary conditions")
    mean_gauge = bc.is_free

    def objective(z):
        f = prestressed_energy(grid, v, z, m, load, alpha)
        g = prestressed_gradient(grid, v, z, m, alpha, bc)
        if mean_gauge:
            g = g - np.mean(g)
        return f, g

    if mean_gauge:
        zeta0 = zeta0 - np.mean(zeta0)
    e0 = prestressed_energy(grid, v, zeta0, m, load, alpha)
    floor = _default_floor(e0, opts.energy_floor)
    zeta, report = _descend(objective, zeta0, _dual_norm(grid.weights, 1), opts, floor)
    run_context.add_timing("minimize_prestressed", report.elapsed)
    return zeta, report


# ----------------------------------------------------------------------
# linear in-plane problems
# ----------------------------------------------------------------------

def _quadratic_form(grid: Grid, m: Material, B11, B12, B22) -> sp.csr_matrix:
    """Sparse matrix of x -> 2 sum_q q J(A(x)) for a linear map A = (B11 x, B12 x, B22 x)."""
    E, nu = m.young, m.poisson
    Q = sp.diags(grid.weights)
    return (E / (1.0 - nu ** 2) * (
        B11.T @ Q @ B11 + B22.T @ Q @ B22
        + nu * (B11.T @ Q @ B22 + B22.T @ Q @ B11)
        + 2.0 * (1.0 - nu) * B12.T @ Q @ B12
    )).tocsr()


def membrane_stiffness(grid: Grid, m: Material) -> sp.csr_matrix:
    """
    Sparse K with u.Ku = 2 sum_q q J(E(u)) for u flattened as (u1, u2)

    Cached on the grid per (E, nu).
    """
    key = ("stiffness", m.young, m.poisson)
    cache = grid.__dict__.setdefault("_stiffness", {})
    if key not in cache:
        Z = sp.csr_matrix((grid.n, grid.n))
        B11 = sp.hstack([grid.D1, Z])
        B22 = sp.hstack([Z, grid.D2])
        B12 = 0.5 * sp.hstack([grid.D2, grid.D1])
        cache[key] = _quadratic_form(grid, m, B11, B12, B22)
    return cache[key]


def bending_stiffness(grid: Grid, m: Material) -> sp.csr_matrix:
    """Sparse K_b with w.K_b w = 2 sum_q q J(D^2 w), cached on the grid per (E, nu)."""
    key = ("bending", m.young, m.poisson)
    cache = grid.__dict__.setdefault("_stiffness", {})
    if key not in cache:
        cache[key] = _quadratic_form(grid, m, grid.H11, grid.H12, grid.H22)
    return cache[key]


def solve_inplane(grid: Grid, m: Material, load: LoadSpec) -> Tuple[VectorField2, float]:
    """
    min F_{h,0}(u) = h int J(E(u)) - h oint f_h . u by a direct saddle-point solve

    The rigid part is fixed to zero in the quadrature inner product through
    Lagrange multipliers.

    Returns:
        (u_star (2, N), minimum value)

    Raises:
        FvKNumericalError: If the solve returns non-finite values
    """
    started = time.time()
    h = m.thickness
    b = load_factor(m, load) * load.inplane_vector(grid).reshape(-1)
    K = membrane_stiffness(grid, m)
    R = sp.csr_matrix(rigid_basis(grid).reshape(3, -1) * np.tile(grid.weights, 2))
    saddle = sp.bmat([[K, R.T], [R, None]], format="csc")
    rhs = np.concatenate([b, np.zeros(3)])
    sol = spla.spsolve(saddle, rhs)
    if not np.all(np.isfinite(sol)):
        raise FvKNumericalError("In-plane solve produced non-finite values")
    u = sol[: 2 * grid.n]
    value = -0.5 * h * float(np.dot(b, u))
    run_context.add_timing("solve_inplane", time.time() - started)
    logger.debug(f"In-plane minimum {value:.10e} on {grid.kind} grid {grid.shape}")
    return u.reshape(2, grid.n), value


def membrane_correction(grid: Grid, w: ScalarField, m: Material) -> Tuple[VectorField2, float]:
    """
    Minimize Q_w(z) = int J(E(z) + Dw (x) Dw / 2) over z by conjugate gradients

    Returns:
        (z with its rigid part removed, min Q_w)

    Raises:
        FvKConvergenceError: If CG misses relative residual 1e-10
    """
    w = grid.check_scalar(w)
    K = membrane_stiffness(grid, m)
    zero = grid.zeros_vector()
    e_w = stretching(grid, zero, w)
    # K z = -B^T q J'(e_w)
    S = energy_density_grad(e_w, m)
    q = grid.weights
    rhs = -strain_adjoint(grid, Sym2(q * S.a11, q * S.a12, q * S.a22)).reshape(-1)
    rhs = remove_rigid_dual(grid, rhs.reshape(2, grid.n)).reshape(-1)

    maxiter = 20 * K.shape[0]
    z, info = spla.cg(K, rhs, rtol=1e-10, atol=0.0, maxiter=maxiter)
    if info != 0:
        residual = float(np.linalg.norm(K @ z - rhs) / max(np.linalg.norm(rhs), 1e-300))
        raise FvKConvergenceError("Membrane correction CG did not converge", iterations=maxiter, residual=residual)
    z = remove_rigid(grid, z.reshape(2, grid.n))
    value = float(np.dot(q, energy_density(stretching(grid, z, w), m)))
    return z, value


def uniform_ps_check(
    grid: Grid,
    sequence: Sequence[Tuple[VectorField2, ScalarField, float]],
    m: Material,
    load: LoadSpec,
    bc: Optional[BoundarySpec],
    bound: float,
    min_ref: Optional[float] = None,
) -> List[PSCheck]:
    """
    Check a candidate Palais-Smale sequence of (u, w, eps) triples

    Each element records whether its scaled energy stays below ``bound`` and
    whether the dual norm of the scaled gradient decreased from the previous
    element.
    """
    if min_ref is None:
        from .energy import inplane_reference
        min_ref = inplane_reference(grid, m, load)[1]
    norm = _dual_norm(grid.weights, 3)
    checks: List[PSCheck] = []
    previous = np.inf
    for u, w, eps in sequence:
        energy = scaled_energy(grid, u, w, m, load, eps, min_ref)
        gu, gw = scaled_gradient(grid, u, w, m, load, eps, bc)
        res = norm(np.concatenate([gu.reshape(-1), gw]))
        checks.append(PSCheck(eps=float(eps), energy=energy, residual=res,
                              bounded=energy <= bound, decreasing=res < previous))
        previous = res
    return checks


# ----------------------------------------------------------------------
# spectral quantities
# ----------------------------------------------------------------------

def poincare_constant(
    grid: Grid, rtol: float = 1e-10, max_iters: int = 1000, block: int = 8
) -> float:
    """
    Smallest K with int |w - mean w|^2 <= K int |Dw|^2 on the grid

    Shifted inverse iteration on the Neumann stiffness with constants deflated.
    A block of vectors is iterated and Rayleigh-Ritz extracts the lowest
    eigenvalue, so near-degenerate low modes do not stall convergence.

    Raises:
        FvKConvergenceError: If the Rayleigh quotient does not settle
    """
    cached = grid.__dict__.get("_poincare")
    if cached is not None:
        return cached
    q = grid.weights
    Q = sp.diags(q)
    S = (grid.D1.T @ Q @ grid.D1 + grid.D2.T @ Q @ grid.D2).tocsc()
    tau = 1e-3 / grid.area
    solve = spla.factorized((S + tau * Q).tocsc())
    block = max(1, min(block, grid.n - 1))

    def deflate(X):
        return X - np.outer(np.ones(grid.n), q @ X) / grid.area

    X = deflate(np.random.default_rng(0).standard_normal((grid.n, block)))
    mu_old = np.inf
    for it in range(max_iters):
        X = deflate(np.column_stack([solve(q * X[:, j]) for j in range(X.shape[1])]))
        # Q-orthonormalize, then Rayleigh-Ritz on the block
        G = X.T @ (q[:, None] * X)
        evals, evecs = sla.eigh(G)
        keep = evals > 1e-14 * evals.max()
        X = X @ (evecs[:, keep] / np.sqrt(evals[keep]))
        ritz, vecs = sla.eigh(X.T @ (S @ X))
        X = X @ vecs
        mu = float(ritz[0])
        if abs(mu - mu_old) <= rtol * abs(mu):
            value = 1.0 / mu
            grid.__dict__["_poincare"] = value
            logger.debug(f"Poincare constant {value:.10e} after {it + 1} iterations")
            return value
        mu_old = mu
    raise FvKConvergenceError("Poincare inverse iteration did not converge", iterations=max_iters)


def compression_threshold(m: Material, grid: Grid) -> float:
    """Uniform normal pressure below which the plate is strongly stable: -h^2 c_nu E / (12 K)."""
    c_nu, _ = coercivity_constants(m.poisson)
    return -m.thickness ** 2 * c_nu * m.young / (12.0 * poincare_constant(grid))


def _beam_constraints(variant: str, n: int, dx: float, q: np.ndarray) -> np.ndarray:
    rows = []
    if variant in ("clamped", "supported"):
        first, last = np.zeros(n), np.zeros(n)
        first[0], last[-1] = 1.0, 1.0
        rows += [first, last]
    if variant == "clamped":
        start, end = np.zeros(n), np.zeros(n)
        start[:3] = (-3.0, 4.0, -1.0)
        end[-3:] = (1.0, -4.0, 3.0)
        rows += [start / (2 * dx), end / (2 * dx)]
    if variant == "free":
        rows.append(q)
    return np.array(rows)


def buckling_critical(
    bc_variant: str,
    interval: Tuple[float, float],
    n_modes: int = 1,
    n_nodes: int = 400,
) -> List[BucklingMode]:
    """
    Smallest k with int psi''^2 = k int psi'^2 for nonzero admissible psi

    Natural conditions of the free variant are left to the variational form;
    affine modes (k = 0) are discarded.

    Args:
        bc_variant: "clamped", "supported" or "free"
        interval: (a, b)
        n_modes: Number of modes returned in increasing k
        n_nodes: Discretization nodes

    Returns:
        List of BucklingMode normalized to max |psi| = 1 with a positive extremum

    Raises:
        FvKConfigError: On an unknown variant or a degenerate interval
    """
    if bc_variant not in BUCKLING_VARIANTS:
        raise FvKConfigError(f"Unknown buckling variant {bc_variant!r}; expected one of {BUCKLING_VARIANTS}")
    a, b = float(interval[0]), float(interval[1])
    if not b > a or n_nodes < 5:
        raise FvKConfigError(f"Need a < b and n_nodes >= 5, got {interval} and {n_nodes}")

    x = np.linspace(a, b, n_nodes)
    dx = x[1] - x[0]
    q = trapezoid_weights(n_nodes, dx)
    d1 = first_derivative_1d(n_nodes, dx).toarray()
    d2 = second_derivative_1d(n_nodes, dx).toarray()
    K = d2.T @ (q[:, None] * d2)
    G = d1.T @ (q[:, None] * d1)

    Z = sla.null_space(_beam_constraints(bc_variant, n_nodes, dx, q))
    k, y = sla.eigh(Z.T @ K @ Z, Z.T @ G @ Z)
    threshold = 1e-8 * max(1.0, 1.0 / (b - a) ** 2)
    keep = np.abs(k) >= threshold

    modes = []
    for value, vec in zip(k[keep][:n_modes], y[:, keep].T[:n_modes]):
        shape = Z @ vec
        peak = shape[np.argmax(np.abs(shape))]
        modes.append(BucklingMode(k=float(value), x=x, shape=shape / peak))
    logger.debug(f"{bc_variant} buckling on {interval}: k = {[mode.k for mode in modes]}")
    return modes


def critical_thickness(k: float, gamma: float, m: Material, case: str = "compression", span: float = 1.0) -> float:
    """
    Thickness at which the limit energy of the buckled family changes sign

    compression: sqrt(12 gamma a (1 - nu^2) / (E k)); shear: sqrt(6 gamma (1 - nu^2) / (E k)).
    """
    if k <= 0 or gamma <= 0:
        raise FvKConfigError(f"k and gamma must be positive, got k={k}, gamma={gamma}")
    factor = 1.0 - m.poisson ** 2
    if case == "compression":
        return float(np.sqrt(12.0 * gamma * span * factor / (m.young * k)))
    if case == "shear":
        return float(np.sqrt(6.0 * gamma * factor / (m.young * k)))
    raise FvKConfigError(f"Unknown critical thickness case {case!r}")
