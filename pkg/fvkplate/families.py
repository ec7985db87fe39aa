"""
FvK Plate Analytic Families Module

Closed-form displacement families sampled onto grids: stretching-free
families whose energies decrease without bound, buckled modes of compressed
and sheared rectangles, and radially or tangentially wrinkling fields on a
prestressed annulus. Generators only sample (and project onto the admissible
set); they never minimize, so they stay independent of the solvers.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field, field_validator
from scipy.interpolate import CubicSpline
from scipy.ndimage import convolve1d

from .energy import LoadSpec, prestressed_energy, total_energy
from .exceptions import FvKConfigError
from .grid import BoundarySpec, Grid, ScalarField, VectorField2, apply_bc
from .material import Material, Sym2, coercivity_constants, energy_density, strain_from_stress
from .solve import buckling_critical, critical_thickness

logger = logging.getLogger(__name__)

FAMILY_KINDS = (
    "uniform_compression",
    "shear_strip",
    "supported_edge",
    "scaling_sawtooth",
    "buckled_compression",
    "buckled_shear",
    "radial_wrinkles",
    "tangential_wrinkles",
)

RADIAL_CASES = ("inner_dominant", "outer_dominant")


class FamilySpec(BaseModel):
    """Family kind with its index (n, m or h) and extra parameters."""
    kind: str = Field(..., description="One of FAMILY_KINDS")
    index: float = Field(..., description="Family index: count n/m, or thickness h for the wrinkling families")
    params: Dict[str, Any] = Field(default_factory=dict, description="Kind-specific parameters")

    @field_validator("kind")
    @classmethod
    def _known_kind(cls, value: str) -> str:
        if value not in FAMILY_KINDS:
            raise ValueError(f"Unknown family kind {value!r}")
        return value

    def check_index(self) -> None:
        """
        Raises:
            FvKConfigError: If the index lies outside the documented range of the kind
        """
        if self.kind in ("radial_wrinkles", "tangential_wrinkles"):
            if not 0.0 < self.index < 1.0:
                raise FvKConfigError(f"{self.kind} needs a thickness in (0, 1), got {self.index}")
            return
        lowest = 0 if self.kind == "supported_edge" else 1
        if self.index != int(self.index) or self.index < lowest:
            raise FvKConfigError(f"{self.kind} needs an integer index >= {lowest}, got {self.index}")


@dataclass
class FamilyInstance:
    """One member of a family sampled on a grid."""
    kind: str
    index: float
    grid: Grid
    u: VectorField2
    w: ScalarField
    bc: BoundarySpec
    stretching: Optional[Sym2] = None
    extras: Dict[str, float] = field(default_factory=dict)

    def describe(self) -> Dict[str, object]:
        return {
            "kind": self.kind,
            "index": self.index,
            "grid": self.grid.describe(),
            "bc": self.bc.describe(self.grid),
            **{k: float(v) for k, v in self.extras.items()},
        }


@dataclass(frozen=True)
class ScalingExponents:
    """
    Thickness exponents of the wrinkling scales

    beta^-1 ~ h^beta_inv, sigma ~ h^sigma, delta ~ h^delta (delta only for the tangential family).
    """
    beta_inv: float
    sigma: float
    delta: Optional[float] = None

    def scales(self, h: float) -> Tuple[float, float, Optional[float]]:
        """(beta, sigma, delta) at thickness h."""
        delta = None if self.delta is None else h ** self.delta
        return h ** (-self.beta_inv), h ** self.sigma, delta


# ----------------------------------------------------------------------
# profiles
# ----------------------------------------------------------------------

def sawtooth(y: np.ndarray) -> np.ndarray:
    """1-periodic tent (1 - |1 - 2y|)/2 with peak 1/2 at y = 1/2."""
    frac = np.mod(y, 1.0)
    return 0.5 * (1.0 - np.abs(1.0 - 2.0 * frac))


def sawtooth_slope(y: np.ndarray) -> np.ndarray:
    """One-sided derivative of sawtooth: +1 on [0, 1/2), -1 on [1/2, 1)."""
    return np.where(np.mod(y, 1.0) < 0.5, 1.0, -1.0)


def shear_profile(s: np.ndarray) -> np.ndarray:
    """
    Even C^{1,1} bump supported in [-1, 1] with psi' = -1 on [1/4, 3/4] and |psi''| <= 4

    Piecewise quadratic: 3/4 - 2t^2 on [0, 1/4], 7/8 - t on [1/4, 3/4], 2(1 - t)^2 on [3/4, 1].
    """
    t = np.abs(np.asarray(s, dtype=float))
    return np.select(
        [t <= 0.25, t <= 0.75, t <= 1.0],
        [0.75 - 2.0 * t ** 2, 0.875 - t, 2.0 * (1.0 - t) ** 2],
        default=0.0,
    )


def shear_profile_slope(s: np.ndarray) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    t = np.abs(s)
    slope = np.select([t <= 0.25, t <= 0.75, t <= 1.0], [-4.0 * t, -np.ones_like(t), -4.0 * (1.0 - t)], default=0.0)
    return np.sign(s) * slope


def shear_profile_work(s: np.ndarray) -> np.ndarray:
    """int_{-1}^{s} psi'(t)^2 dt"""
    s = np.asarray(s, dtype=float)
    t = np.minimum(np.abs(s), 1.0)
    half = np.select(
        [t <= 0.25, t <= 0.75],
        [16.0 * t ** 3 / 3.0, 1.0 / 12.0 + (t - 0.25)],
        default=2.0 / 3.0 - 16.0 * (1.0 - t) ** 3 / 3.0,
    )
    return 2.0 / 3.0 + np.sign(s) * half


def _bump_kernel(sigma: float, step: float) -> Optional[np.ndarray]:
    half = int(math.floor(sigma / step))
    if half < 1:
        return None
    x = np.arange(-half, half + 1) * step / sigma
    kernel = np.zeros_like(x)
    inside = np.abs(x) < 1.0
    kernel[inside] = np.exp(-1.0 / (1.0 - x[inside] ** 2))
    return kernel / kernel.sum()


def mollified_tent(t: np.ndarray, start: float, period: float, sigma: float) -> np.ndarray:
    """
    Periodic slope-one tent max{0, min{s - sigma, period - sigma - s}} (s = t - start mod period)
    convolved with the smooth bump supported in [-sigma, sigma]

    The convolution is discrete on a fine periodic grid; values at t are
    interpolated from it. sigma = 0 gives the plain tent.
    """
    if period <= 0 or sigma < 0 or 2.0 * sigma >= period:
        raise FvKConfigError(f"Tent needs period > 2 sigma >= 0, got period={period}, sigma={sigma}")
    samples = 4096 if sigma == 0 else min(max(4096, int(math.ceil(16.0 * period / sigma))), 2 ** 21)
    s = np.arange(samples) * period / samples
    tent = np.maximum(0.0, np.minimum(s - sigma, period - sigma - s))
    if sigma > 0:
        kernel = _bump_kernel(sigma, period / samples)
        if kernel is not None:
            tent = convolve1d(tent, kernel, mode="wrap")
    local = np.mod(np.asarray(t, dtype=float) - start, period)
    return np.interp(local, np.append(s, period), np.append(tent, tent[0]))


def _linear_field(grid: Grid, A: Sym2) -> VectorField2:
    """Displacement with constant symmetric gradient A."""
    return np.stack([A.a11 * grid.x1 + A.a12 * grid.x2, A.a12 * grid.x1 + A.a22 * grid.x2])


def _require_rectangle(grid: Grid, kind: str) -> None:
    if grid.kind != "rectangle":
        raise FvKConfigError(f"{kind} family lives on a rectangle, got a {grid.kind} grid")


def _require_annulus(grid: Grid, kind: str) -> None:
    if grid.kind != "annulus":
        raise FvKConfigError(f"{kind} family lives on an annulus, got a {grid.kind} grid")


# ----------------------------------------------------------------------
# stretching-free families
# ----------------------------------------------------------------------

def family_uniform_compression(n: int, grid: Grid) -> FamilyInstance:
    """
    u_n = -n (2 + x1)^3 / 6 e1, w_n = sqrt(n) (2 + x1)^2 / 2 on (-2, 2) x (-1, 1)

    Supported on the left edge x1 = -2, where w_n vanishes.
    """
    _require_rectangle(grid, "uniform_compression")
    s = 2.0 + grid.x1
    u = np.stack([-n * s ** 3 / 6.0, np.zeros(grid.n)])
    w = math.sqrt(n) * s ** 2 / 2.0
    bc = BoundarySpec.on_edges(grid, "A1", ["left"])
    return FamilyInstance("uniform_compression", n, grid, u, w, bc, stretching=Sym2.zeros(grid.n))


def uniform_compression_energy(n: int, m: Material, f: float) -> float:
    """Closed-form energy n h (h^2 E / (3 (1 - nu^2)) + 64 f / 3) under normal pressure f."""
    h = m.thickness
    return n * h * (h ** 2 * m.plane_modulus / 3.0 + 64.0 * f / 3.0)


def uniform_compression_threshold(m: Material) -> float:
    """Pressure below which the uniform compression family diverges: -C_nu E h^2 / 64."""
    _, C_nu = coercivity_constants(m.poisson)
    return -C_nu * m.young * m.thickness ** 2 / 64.0


def family_shear_strip(n: int, grid: Grid) -> FamilyInstance:
    """
    w_n = sqrt(n) psi(x1 - x2), u_n = n (-U, U) with U = (1/2) int_{-1}^{x1 - x2} psi'^2

    Supported where the boundary meets |x1 - x2| >= 1.
    """
    _require_rectangle(grid, "shear_strip")
    s = grid.x1 - grid.x2
    U = 0.5 * shear_profile_work(s)
    u = n * np.stack([-U, U])
    w = math.sqrt(n) * shear_profile(s)
    bc = BoundarySpec.from_predicate(grid, "A1", lambda x1, x2: np.abs(x1 - x2) >= 1.0)
    return FamilyInstance("shear_strip", n, grid, u, w, bc, stretching=Sym2.zeros(grid.n))


def shear_strip_energy(n: int, m: Material, gamma: float) -> float:
    """Closed-form energy n (16 h^3 E / (3 (1 - nu^2)) - 8 h gamma / 3) on (-2, 2) x (-1, 1)."""
    h = m.thickness
    return n * (16.0 * h ** 3 * m.plane_modulus / 3.0 - 8.0 * h * gamma / 3.0)


def shear_load(gamma: float) -> LoadSpec:
    """Tangential edge traction gamma tau of the sheared rectangle (the traction of gamma (e1 (x) e2 + e2 (x) e1))."""
    return LoadSpec.uniform_stress(Sym2(0.0, gamma, 0.0))


def family_supported_edge(m_index: int, grid: Grid) -> FamilyInstance:
    """u = -(x1 + m)^3 / 6 e1, w_m = ((x1 + m)^2 - m^2) / 2 on (0, 1)^2, supported on x1 = 0."""
    _require_rectangle(grid, "supported_edge")
    s = grid.x1 + m_index
    u = np.stack([-s ** 3 / 6.0, np.zeros(grid.n)])
    w = (s ** 2 - m_index ** 2) / 2.0
    bc = BoundarySpec.on_edges(grid, "A1", ["left"])
    return FamilyInstance("supported_edge", m_index, grid, u, w, bc, stretching=Sym2.zeros(grid.n))


def supported_edge_energy(m_index: int, m: Material, lam: float) -> float:
    """Closed-form energy h^3 E / (24 (1 - nu^2)) - lam^2 h^3 (3 m^2 + 3 m + 1) / 6 under pressure -lam^2 h^2."""
    h = m.thickness
    return h ** 3 * m.plane_modulus / 24.0 - lam ** 2 * h ** 3 * supported_edge_growth(m_index) / 6.0


def supported_edge_growth(m_index):
    return 3.0 * np.asarray(m_index, dtype=float) ** 2 + 3.0 * np.asarray(m_index, dtype=float) + 1.0


def family_scaling_sawtooth(n: int, grid: Grid) -> FamilyInstance:
    """
    zeta_n = phi(n y) psi_n(x) / sqrt(n), v_n = (0, -n y / 2) on (0, a) x (0, 1)

    phi is the unit sawtooth and psi_n the ramp rising over [0, 1/n] and falling
    over [a - 1/n, a]. The analytic stretching (with one-sided slopes at kinks)
    is stored on the instance.
    """
    _require_rectangle(grid, "scaling_sawtooth")
    a = float(grid.params["x1"])
    if n * a <= 2.0:
        raise FvKConfigError(f"scaling_sawtooth needs n a > 2, got n={n}, a={a}")
    x, y = grid.x1, grid.x2
    psi = np.clip(np.minimum(n * x, n * (a - x)), 0.0, 1.0)
    dpsi = np.where(x < 1.0 / n, float(n), np.where(x > a - 1.0 / n, -float(n), 0.0))
    phi = sawtooth(n * y)
    dphi = sawtooth_slope(n * y)

    zeta = phi * psi / math.sqrt(n)
    v = np.stack([np.zeros(grid.n), -n * y / 2.0])
    D = Sym2(
        dpsi ** 2 * phi ** 2 / (2.0 * n),
        0.5 * psi * dpsi * phi * dphi,
        0.5 * n * (psi ** 2 * dphi ** 2 - 1.0),
    )
    bc = BoundarySpec.on_edges(grid, "A1", ["left", "right", "bottom", "top"])
    return FamilyInstance("scaling_sawtooth", n, grid, v, apply_bc(grid, zeta, bc), bc, stretching=D,
                          extras={"span": a})


def scaling_sawtooth_load() -> LoadSpec:
    """Compression e2 on y = 0 and -e2 on y = 1."""
    return LoadSpec.per_edge({"bottom": (0.0, 1.0), "top": (0.0, -1.0)})


def scaling_sawtooth_bound(n: int, m: Material, a: float) -> float:
    """Upper bound n E C_nu / 2 - n a / 2 of the membrane-relaxed energy."""
    _, C_nu = coercivity_constants(m.poisson)
    return n * m.young * C_nu / 2.0 - n * a / 2.0


# ----------------------------------------------------------------------
# buckled modes
# ----------------------------------------------------------------------

def buckled_mode(kind: str, n: int, grid: Grid, m: Material, gamma: float) -> FamilyInstance:
    """
    n-th clamped buckling mode embedded on the rectangle with its critical thickness

    compression: w = psi(x2) on (0, a) x (0, 1) under -gamma e2 (x) e2, clamped on
    the edges x2 = 0, 1; the 1D eigenproblem is solved on the grid's own x2 nodes.
    shear: w = psi(x1 - x2) for |x1 - x2| <= 1 (zero elsewhere) on (-2, 2) x (-1, 1)
    under gamma (e1 (x) e2 + e2 (x) e1), clamped on the top edge left of x1 = 0,
    the bottom edge right of it and both vertical edges.

    Returns:
        FamilyInstance with u the in-plane state u* and extras k and h_critical
    """
    _require_rectangle(grid, kind)
    if n < 1:
        raise FvKConfigError(f"Mode index must be >= 1, got {n}")
    if gamma <= 0:
        raise FvKConfigError(f"Load intensity gamma must be positive, got {gamma}")

    if kind == "compression":
        ys = grid.axis1
        mode = buckling_critical("clamped", (ys[0], ys[-1]), n_modes=n, n_nodes=len(ys))[n - 1]
        w = np.tile(mode.shape, grid.shape[0])
        stress = Sym2(0.0, 0.0, -gamma)
        h_crit = critical_thickness(mode.k, gamma, m, "compression", span=1.0)
        bc = BoundarySpec.on_edges(grid, "A0", ["bottom", "top"])
        family_kind = "buckled_compression"
    elif kind == "shear":
        mode = buckling_critical("clamped", (-1.0, 1.0), n_modes=n, n_nodes=401)[n - 1]
        spline = CubicSpline(mode.x, mode.shape)
        s = grid.x1 - grid.x2
        w = np.where(np.abs(s) <= 1.0, spline(np.clip(s, -1.0, 1.0)), 0.0)
        stress = Sym2(0.0, gamma, 0.0)
        h_crit = critical_thickness(mode.k, gamma, m, "shear")
        x0, x1, y0, y1 = (grid.params[key] for key in ("x0", "x1", "y0", "y1"))
        xm = 0.5 * (x0 + x1)
        tol = 1e-12 * (x1 - x0)
        bc = BoundarySpec.from_predicate(
            grid, "A0",
            lambda p, q: (np.abs(p - x0) < tol) | (np.abs(p - x1) < tol)
            | ((np.abs(q - y1) < tol) & (p <= xm + tol)) | ((np.abs(q - y0) < tol) & (p >= xm - tol)),
        )
        w = apply_bc(grid, w, bc)
        family_kind = "buckled_shear"
    else:
        raise FvKConfigError(f"Unknown buckled mode kind {kind!r}; expected 'compression' or 'shear'")

    u_star = _linear_field(grid, strain_from_stress(stress, m))
    logger.debug(f"{family_kind} mode {n}: k={mode.k:.10e}, h={h_crit:.10e}")
    return FamilyInstance(family_kind, n, grid, u_star, w, bc,
                          extras={"k": mode.k, "h_critical": h_crit, "gamma": gamma})


# ----------------------------------------------------------------------
# wrinkling on the prestressed annulus
# ----------------------------------------------------------------------

def optimal_scaling(kind: str, alpha: float, sigma_exponent: Optional[float] = None) -> ScalingExponents:
    """
    Thickness exponents balancing bending against the membrane defect

    radial: beta^-1 ~ h^((2 - alpha)/3), sigma ~ h^((5/3)(2 - alpha)) unless sigma_exponent is given.
    tangential: beta^-1 ~ h^(1 - alpha/2), delta ~ beta^(-1/2), sigma ~ h^(1 - alpha/2) beta^(1/2).
    """
    if alpha < 0:
        raise FvKConfigError(f"alpha must be >= 0, got {alpha}")
    if kind == "radial":
        beta_inv = (2.0 - alpha) / 3.0
        sigma = 5.0 * (2.0 - alpha) / 3.0 if sigma_exponent is None else sigma_exponent
        return ScalingExponents(beta_inv, sigma)
    if kind == "tangential":
        beta_inv = 1.0 - alpha / 2.0
        half = 0.5 * beta_inv
        sigma = half if sigma_exponent is None else sigma_exponent
        return ScalingExponents(beta_inv, sigma, half)
    raise FvKConfigError(f"Unknown scaling kind {kind!r}")


def radial_amplitude_sq(r: np.ndarray, a: float, b: float, nu: float, case: str) -> np.ndarray:
    """Squared wrinkle slope 2(1 - nu) b r^-2 - 2a(1 + nu) (inner_dominant) or 2(nu - 1) b r^-2 - 2a(1 + nu)."""
    if case == "inner_dominant":
        return 2.0 * (1.0 - nu) * b / r ** 2 - 2.0 * a * (1.0 + nu)
    if case == "outer_dominant":
        return 2.0 * (nu - 1.0) * b / r ** 2 - 2.0 * a * (1.0 + nu)
    raise FvKConfigError(f"Unknown radial case {case!r}; expected one of {RADIAL_CASES}")


def _prestress_field(grid: Grid, a: float, b: float) -> VectorField2:
    scale = a + b / grid.r ** 2
    return np.stack([scale * grid.x1, scale * grid.x2])


def family_radial_wrinkles(
    h: float,
    grid: Grid,
    a: float,
    b: float,
    nu: float,
    case: str = "inner_dominant",
    beta: Optional[float] = None,
    sigma: Optional[float] = None,
    alpha: float = 0.0,
    sigma_exponent: Optional[float] = None,
) -> FamilyInstance:
    """
    Radially oscillating zeta_h = floor(beta)^-1 A(r) psi*(R1 + (r - R1) floor(beta))

    psi* is the (R2 - R1)-periodic mollified tent; A(r) the square root of
    radial_amplitude_sq. Clamped on both circles.

    Args:
        h: Thickness, used for scales not given explicitly
        beta, sigma: Oscillation count and mollifier half-width in tent units; default from optimal_scaling

    Raises:
        FvKConfigError: If the amplitude radicand is negative somewhere on [R1, R2]
    """
    _require_annulus(grid, "radial_wrinkles")
    R1, R2 = grid.params["R1"], grid.params["R2"]
    radicand_ends = radial_amplitude_sq(np.array([R1, R2]), a, b, nu, case)
    if np.any(radicand_ends < 0):
        raise FvKConfigError(f"Amplitude radicand negative for a={a}, b={b}, case={case}: {radicand_ends}")

    exps = optimal_scaling("radial", alpha, sigma_exponent)
    default_beta, default_sigma, _ = exps.scales(h)
    beta = default_beta if beta is None else beta
    sigma = default_sigma * (R2 - R1) if sigma is None else sigma
    count = int(math.floor(beta))
    if count < 1:
        raise FvKConfigError(f"Oscillation count floor(beta) must be >= 1, got beta={beta}")

    r = grid.r
    amplitude = np.sqrt(np.maximum(radial_amplitude_sq(r, a, b, nu, case), 0.0))
    zeta = amplitude * mollified_tent(R1 + (r - R1) * count, R1, R2 - R1, sigma) / count
    bc = BoundarySpec.on_edges(grid, "A0", ["inner", "outer"])
    return FamilyInstance("radial_wrinkles", h, grid, _prestress_field(grid, a, b), apply_bc(grid, zeta, bc), bc,
                          extras={"beta": beta, "sigma": sigma, "count": count, "a": a, "b": b})


def family_tangential_wrinkles(
    h: float,
    grid: Grid,
    b: float,
    nu: float,
    beta: Optional[float] = None,
    sigma: Optional[float] = None,
    delta: Optional[float] = None,
    alpha: float = 0.0,
) -> FamilyInstance:
    """
    Tangentially oscillating zeta_h = sqrt(-2b(1 - nu)) floor(beta)^-1 phi*(floor(beta) theta) ramp(r)

    phi* is the 2 pi-periodic mollified tent; ramp rises linearly over
    [R1, R1 + delta] and equals 1 beyond. Supported on the inner circle.

    Raises:
        FvKConfigError: If b >= 0
    """
    _require_annulus(grid, "tangential_wrinkles")
    if b >= 0:
        raise FvKConfigError(f"Tangential wrinkles need b < 0, got b={b}")
    R1, R2 = grid.params["R1"], grid.params["R2"]
    default_beta, default_sigma, default_delta = optimal_scaling("tangential", alpha).scales(h)
    beta = default_beta if beta is None else beta
    sigma = default_sigma if sigma is None else sigma
    delta = default_delta if delta is None else delta
    count = int(math.floor(beta))
    if count < 1:
        raise FvKConfigError(f"Oscillation count floor(beta) must be >= 1, got beta={beta}")
    if not 0.0 < delta < R2 - R1:
        raise FvKConfigError(f"Ramp width delta must lie in (0, R2 - R1), got {delta}")

    ramp = np.clip((grid.r - R1) / delta, 0.0, 1.0)
    profile = mollified_tent(count * grid.theta, 0.0, 2.0 * np.pi, sigma)
    zeta = math.sqrt(-2.0 * b * (1.0 - nu)) * profile * ramp / count
    bc = BoundarySpec.on_edges(grid, "A1", ["inner"])
    return FamilyInstance("tangential_wrinkles", h, grid, _prestress_field(grid, 0.0, b), zeta, bc,
                          extras={"beta": beta, "sigma": sigma, "delta": delta, "count": count, "b": b})


# ----------------------------------------------------------------------
# grids, energies and certificates
# ----------------------------------------------------------------------

def family_grid(kind: str, index: float = 1, **params) -> Grid:
    """
    Grid resolving the features of a family member

    Params by kind: scaling_sawtooth ``span``; buckled_compression ``span``, ``ny``;
    radial_wrinkles ``R1``, ``R2``, ``beta``, ``sigma``, ``ntheta``;
    tangential_wrinkles ``R1``, ``R2``, ``beta``, ``sigma``, ``nr``.
    Other kinds accept ``nx``, ``ny``.
    """
    if kind in ("uniform_compression", "shear_strip", "buckled_shear"):
        return Grid.rectangle((-2.0, 2.0), (-1.0, 1.0), int(params.get("nx", 81)), int(params.get("ny", 41)))
    if kind == "supported_edge":
        return Grid.rectangle((0.0, 1.0), (0.0, 1.0), int(params.get("nx", 33)), int(params.get("ny", 33)))
    if kind == "scaling_sawtooth":
        n, a = int(index), float(params["span"])
        return Grid.rectangle((0.0, a), (0.0, 1.0), int(math.ceil(8 * n * a)) + 1, 8 * n + 1)
    if kind == "buckled_compression":
        a = float(params.get("span", 1.0))
        return Grid.rectangle((0.0, a), (0.0, 1.0), int(params.get("nx", 11)), int(params.get("ny", 201)))
    if kind == "radial_wrinkles":
        R1, R2 = float(params.get("R1", 1.0)), float(params.get("R2", 2.0))
        count = int(math.floor(params["beta"]))
        per_period = max(16, int(math.ceil(4.0 * (R2 - R1) / params["sigma"])))
        return Grid.annulus(R1, R2, count * per_period + 1, int(params.get("ntheta", 16)))
    if kind == "tangential_wrinkles":
        R1, R2 = float(params.get("R1", 1.0)), float(params.get("R2", 2.0))
        count = int(math.floor(params["beta"]))
        per_period = max(16, int(math.ceil(8.0 * np.pi / params["sigma"])))
        return Grid.annulus(R1, R2, int(params.get("nr", 33)), count * per_period)
    raise FvKConfigError(f"Unknown family kind {kind!r}")


def family_energy(instance: FamilyInstance, m: Material, load: LoadSpec, alpha: float = 0.0) -> float:
    """
    The energy each family tracks

    Stretching-free and buckled families: the discrete FvK functional. The
    sawtooth family: the membrane-relaxed energy int J(D) - oint f . v from its
    analytic stretching. Wrinkling families: h^(-2 alpha - 1) times the
    prestressed functional.
    """
    grid = instance.grid
    if instance.kind == "scaling_sawtooth":
        membrane = float(np.dot(grid.weights, energy_density(instance.stretching, m)))
        work = float(np.sum(load.inplane_vector(grid) * instance.u))
        return membrane - work
    if instance.kind in ("radial_wrinkles", "tangential_wrinkles"):
        return prestressed_energy(grid, instance.u, instance.w, m, load, alpha, scaled=True)
    return total_energy(grid, instance.u, instance.w, m, load).total


class DivergenceCertificate(BaseModel):
    """Evidence that a family's energies decrease without bound."""
    decreasing: bool = Field(..., description="Energies strictly decrease with the index")
    slope: float = Field(..., description="Least-squares slope against the regressor")
    intercept: float = Field(..., description="Least-squares intercept")
    r_squared: float = Field(..., description="Coefficient of determination of the linear fit")
    certified: bool = Field(..., description="decreasing, negative slope and r_squared > min_r_squared")


def divergence_certificate(
    indices: Sequence[float],
    energies: Sequence[float],
    growth: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    min_r_squared: float = 0.99,
) -> DivergenceCertificate:
    """
    Strict decrease plus a linear fit of energies against growth(indices) (default: the indices)

    Raises:
        FvKConfigError: With fewer than three points
    """
    x = np.asarray(indices, dtype=float)
    y = np.asarray(energies, dtype=float)
    if x.shape != y.shape or len(x) < 3:
        raise FvKConfigError("Divergence certificate needs at least three (index, energy) pairs")
    if growth is not None:
        x = np.asarray(growth(x), dtype=float)
    slope, intercept = np.polyfit(x, y, 1)
    residual = y - (slope * x + intercept)
    total = float(np.sum((y - y.mean()) ** 2))
    r_squared = 1.0 - float(np.sum(residual ** 2)) / total if total > 0 else 0.0
    decreasing = bool(np.all(np.diff(y) < 0))
    return DivergenceCertificate(
        decreasing=decreasing,
        slope=float(slope),
        intercept=float(intercept),
        r_squared=r_squared,
        certified=decreasing and slope < 0 and r_squared > min_r_squared,
    )


def build_family(spec: FamilySpec, grid: Optional[Grid] = None, m: Optional[Material] = None) -> FamilyInstance:
    """Dispatch a FamilySpec to its generator, building the default grid when none is given."""
    spec.check_index()
    p = spec.params
    index = spec.index
    if spec.kind in ("uniform_compression", "shear_strip", "supported_edge", "scaling_sawtooth"):
        n = int(index)
        grid = grid or family_grid(spec.kind, n, **p)
        generator = {
            "uniform_compression": family_uniform_compression,
            "shear_strip": family_shear_strip,
            "supported_edge": family_supported_edge,
            "scaling_sawtooth": family_scaling_sawtooth,
        }[spec.kind]
        return generator(n, grid)
    if m is None:
        raise FvKConfigError(f"{spec.kind} needs a material")
    if spec.kind in ("buckled_compression", "buckled_shear"):
        grid = grid or family_grid(spec.kind, index, **p)
        kind = "compression" if spec.kind == "buckled_compression" else "shear"
        return buckled_mode(kind, int(index), grid, m, float(p.get("gamma", 1.0)))
    if spec.kind == "radial_wrinkles":
        a, b = float(p["a"]), float(p["b"])
        exps = optimal_scaling("radial", float(p.get("alpha", 0.0)), p.get("sigma_exponent"))
        beta, sigma, _ = exps.scales(index)
        beta = float(p.get("beta", beta))
        R1, R2 = float(p.get("R1", 1.0)), float(p.get("R2", 2.0))
        sigma = float(p.get("sigma", sigma * (R2 - R1)))
        grid = grid or family_grid("radial_wrinkles", index, R1=R1, R2=R2, beta=beta, sigma=sigma,
                                   ntheta=p.get("ntheta", 16))
        case = str(p.get("case", "inner_dominant"))
        return family_radial_wrinkles(index, grid, a, b, m.poisson, case, beta, sigma, float(p.get("alpha", 0.0)))
    b = float(p["b"])
    alpha = float(p.get("alpha", 0.0))
    exps = optimal_scaling("tangential", alpha)
    beta_inv = float(p.get("beta_exponent", exps.beta_inv))
    beta = float(p.get("beta", index ** (-beta_inv)))
    sigma = float(p.get("sigma", index ** float(p.get("sigma_exponent", exps.sigma))))
    delta = float(p.get("delta", index ** float(p.get("delta_exponent", exps.delta))))
    grid = grid or family_grid("tangential_wrinkles", index, R1=p.get("R1", 1.0), R2=p.get("R2", 2.0),
                               beta=beta, sigma=sigma, nr=p.get("nr", 33))
    return family_tangential_wrinkles(index, grid, b, m.poisson, beta, sigma, delta, alpha)
