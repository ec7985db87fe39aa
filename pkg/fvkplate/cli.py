"""
FvK Plate Command Line Module

Subcommands energy, gradcheck, minimize, buckle, family, relax, prestress,
poincare and sweep. Every run writes ``summary.json`` plus CSV tables into
its output directory and exits with 0 (success), 1 (usage or configuration
error), 2 (numerical failure) or 3 (certified divergence).
"""

import argparse
import json
import logging
import math
import os
import sys
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional

import numpy as np
from pydantic import BaseModel, Field, ValidationError

from . import __version__
from .context import run_context
from .core import fvk_initialize, get_config
from .energy import (
    LoadSpec,
    bending_energy,
    gradient_check,
    limit_energy,
    load_factor,
    prestressed_energy,
    total_energy,
)
from .exceptions import FvKConfigError, FvKError, FvKNumericalError
from .families import (
    FamilySpec,
    build_family,
    buckled_mode,
    divergence_certificate,
    family_energy,
    family_grid,
    family_scaling_sawtooth,
    scaling_sawtooth_bound,
    scaling_sawtooth_load,
    shear_load,
    shear_strip_energy,
    supported_edge_energy,
    supported_edge_growth,
    uniform_compression_energy,
    uniform_compression_threshold,
)
from .grid import BoundarySpec, Grid, dump_fields_csv, hessian_scalar, integrate, sym_grad_vector
from .material import Material, Sym2, coercivity_constants, strain_from_stress
from .presets import RunConfig, list_presets, resolve_config
from .relaxation import (
    annulus_prestress,
    classify_state,
    convexify_2d,
    min_gA,
    mixed_radius,
    neumann_residual,
    relaxed_min_energy,
)
from .solve import (
    buckling_critical,
    compression_threshold,
    critical_thickness,
    minimize,
    minimize_prestressed,
    poincare_constant,
    random_init,
    solve_inplane,
)
from .utils import parse_index_range, to_jsonable, write_csv, write_json

logger = logging.getLogger(__name__)

SCHEMA_VERSION = "1"

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICAL = 2
EXIT_DIVERGENCE = 3

DIVERGENT_FAMILIES = ("uniform_compression", "shear_strip", "supported_edge", "scaling_sawtooth")


class RunSummary(BaseModel):
    """Content of summary.json."""
    schema_version: str = Field(SCHEMA_VERSION, description="Version of this record layout")
    package_version: str = Field(__version__, description="fvkplate version")
    command: str = Field(..., description="Subcommand")
    preset: Optional[str] = Field(None, description="Preset name")
    exit_code: int = Field(..., description="Process exit code")
    config: Dict[str, Any] = Field(..., description="Resolved configuration echo")
    grid: Optional[Dict[str, Any]] = Field(None, description="Grid record")
    energy: Optional[Dict[str, Any]] = Field(None, description="EnergyBreakdown")
    solve: Optional[Dict[str, Any]] = Field(None, description="SolveReport")
    derived: Dict[str, Any] = Field(default_factory=dict, description="Derived quantities")
    tables: Dict[str, Any] = Field(default_factory=dict, description="Small result tables")
    timings: Dict[str, float] = Field(default_factory=dict, description="Wall-clock seconds")


@dataclass
class CommandResult:
    exit_code: int
    headline: str
    grid: Optional[Grid] = None
    energy: Optional[Dict[str, Any]] = None
    solve: Optional[Dict[str, Any]] = None
    derived: Dict[str, Any] = field(default_factory=dict)
    tables: Dict[str, Any] = field(default_factory=dict)


class _UsageError(FvKConfigError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


# ----------------------------------------------------------------------
# helpers
# ----------------------------------------------------------------------

def _solve_exit(report) -> int:
    if report.diverging:
        return EXIT_DIVERGENCE
    return EXIT_OK if report.converged else EXIT_NUMERICAL


def _h2_seminorm(grid: Grid, w: np.ndarray) -> float:
    H = hessian_scalar(grid, w)
    return math.sqrt(max(integrate(grid, H.ddot(H)), 0.0))


def _annulus_grid(cfg: RunConfig) -> Grid:
    if cfg.grid.kind != "annulus":
        raise FvKConfigError(f"{cfg.command} needs an annulus grid, got {cfg.grid.kind}")
    return cfg.grid.build()


def _prestress(cfg: RunConfig, m: Material):
    p = cfg.params
    if "p1" not in p or "p2" not in p:
        raise FvKConfigError(f"{cfg.command} needs pressures p1 and p2")
    return annulus_prestress(float(p["p1"]), float(p["p2"]), cfg.grid.R1, cfg.grid.R2, m)


def _classify_rows(grid: Grid, state):
    for x1, x2, s1, tensile in zip(grid.x1, grid.x2, state.s1, state.tensile):
        yield x1, x2, s1, "tensile" if tensile else "compressive"


# ----------------------------------------------------------------------
# subcommands
# ----------------------------------------------------------------------

def _cmd_energy(cfg: RunConfig, out: str) -> CommandResult:
    m = cfg.material()
    grid = cfg.grid.build()
    load = cfg.load.build()
    bc = cfg.bc.build(grid)
    u, w = random_init(grid, bc, cfg.init_amplitude, cfg.seed)
    breakdown = total_energy(grid, u, w, m, load, bc)
    dump_fields_csv(os.path.join(out, "fields.csv"), grid, u, w)
    return CommandResult(
        EXIT_OK,
        f"total energy {breakdown.total:.10e}",
        grid=grid,
        energy=breakdown.model_dump(),
        derived={"equilibrated": load.is_equilibrated(grid), "load": load.describe()},
    )


def _cmd_gradcheck(cfg: RunConfig, out: str) -> CommandResult:
    m = cfg.material()
    grid = cfg.grid.build()
    trials = int(cfg.params.get("trials", 10))
    tol = float(cfg.params.get("tol", 1e-6))
    amplitude = float(cfg.params.get("amplitude", 0.05))
    rng = np.random.default_rng(cfg.seed)
    errors = []
    for trial in range(trials):
        u, w = random_init(grid, BoundarySpec.free(), amplitude, cfg.seed + trial)
        stress = Sym2(*(0.1 * rng.standard_normal(3)))
        load = LoadSpec.uniform_stress(stress, alpha=cfg.load.alpha, transverse=0.01 * float(rng.standard_normal()))
        errors.append(gradient_check(grid, u, w, m, load, step=float(cfg.params.get("step", 1e-6))))
    worst = max(errors)
    write_csv(os.path.join(out, "gradcheck.csv"), ["trial", "max_relative_error"], enumerate(errors))
    return CommandResult(
        EXIT_OK if worst < tol else EXIT_NUMERICAL,
        f"max relative error {worst:.3e} over {trials} trials",
        grid=grid,
        derived={"max_relative_error": worst, "tolerance": tol, "trials": trials},
        tables={"errors": errors},
    )


def _cmd_minimize(cfg: RunConfig, out: str) -> CommandResult:
    m = cfg.material()
    grid = cfg.grid.build()
    derived: Dict[str, Any] = {}
    if "threshold_factor" in cfg.params and "f" not in cfg.params:
        threshold = compression_threshold(m, grid)
        pressure = float(cfg.params["threshold_factor"]) * threshold
        load = LoadSpec.normal_pressure(pressure, alpha=cfg.load.alpha, transverse=cfg.load.transverse)
        derived.update({"compression_threshold": threshold, "poincare_constant": poincare_constant(grid)})
    elif "f" in cfg.params:
        load = LoadSpec.normal_pressure(float(cfg.params["f"]), alpha=cfg.load.alpha, transverse=cfg.load.transverse)
    else:
        load = cfg.load.build()
    bc = cfg.bc.build(grid)

    u0, w0 = random_init(grid, bc, cfg.init_amplitude, cfg.seed)
    (u, w), report = minimize(grid, m, load, bc, (u0, w0), cfg.solver)
    breakdown = total_energy(grid, u, w, m, load, bc)
    dump_fields_csv(os.path.join(out, "fields.csv"), grid, u, w)

    centered = w - np.dot(grid.weights, w) / grid.area
    initial_h2 = _h2_seminorm(grid, w0)
    derived.update({
        "load": load.describe(),
        "bc": bc.describe(grid),
        "max_abs_w_centered": float(np.max(np.abs(centered))),
        "h2_seminorm_ratio": _h2_seminorm(grid, w) / initial_h2 if initial_h2 > 0 else 0.0,
    })
    target = None if load.stress is None else strain_from_stress(load.stress * load_factor(m, load), m)
    if target is not None and float(target.norm()) > 0.0:
        # flat minimizers carry the uniform strain of h^alpha S
        deviation = sym_grad_vector(grid, u) - target
        derived["strain_deviation"] = float(np.max(deviation.norm())) / float(target.norm())
    return CommandResult(
        _solve_exit(report),
        f"{report.message}: energy {breakdown.total:.10e}, residual {report.final_residual:.3e}",
        grid=grid,
        energy=breakdown.model_dump(),
        solve=report.summary(),
        derived=derived,
    )


def _cmd_buckle(cfg: RunConfig, out: str) -> CommandResult:
    m = cfg.material()
    p = cfg.params
    case = str(p.get("case", "compression"))
    variant = str(p.get("variant", "clamped"))
    interval = tuple(p.get("interval", (0.0, 1.0)))
    gamma = float(p.get("gamma", 1.0))
    span = float(p.get("span", 1.0))
    modes = buckling_critical(variant, interval, int(p.get("modes", 3)), int(p.get("nodes", 400)))

    length = interval[1] - interval[0]
    first_closed = (2.0 * math.pi / length) ** 2 if variant == "clamped" else (math.pi / length) ** 2
    rows = []
    for n, mode in enumerate(modes, start=1):
        rows.append({"n": n, "k": mode.k, "h_critical": critical_thickness(mode.k, gamma, m, case, span)})
    write_csv(
        os.path.join(out, "modes.csv"),
        ["x"] + [f"mode_{n}" for n in range(1, len(modes) + 1)],
        zip(modes[0].x, *[mode.shape for mode in modes]),
    )

    derived: Dict[str, Any] = {
        "k1_closed_form": first_closed,
        "k1_relative_error": abs(modes[0].k - first_closed) / first_closed,
        "h1_closed_form": critical_thickness(first_closed, gamma, m, case, span),
    }
    grid = None
    if variant == "clamped":
        kind = "buckled_compression" if case == "compression" else "buckled_shear"
        grid = family_grid(kind, 1, span=span)
        instance = buckled_mode(case, 1, grid, m, gamma)
        m_crit = m.with_thickness(instance.extras["h_critical"])
        derived["limit_energy_at_critical"] = limit_energy(grid, instance.u, instance.w, m_crit)
        derived["bending_at_critical"] = bending_energy(grid, instance.w, m_crit)
        dump_fields_csv(os.path.join(out, "fields.csv"), grid, instance.u, instance.w)
    return CommandResult(
        EXIT_OK,
        f"{variant} {case}: k1 = {modes[0].k:.8e} (closed form {first_closed:.8e})",
        grid=grid,
        derived=derived,
        tables={"modes": rows},
    )


def _family_setup(kind: str, cfg: RunConfig, m: Material):
    """Load, analytic energy and regressor of a divergent family."""
    p = cfg.params
    _, C_nu = coercivity_constants(m.poisson)
    if kind == "uniform_compression":
        f = float(p["f"]) if "f" in p else float(p.get("threshold_factor", 2.0)) * uniform_compression_threshold(m)
        return LoadSpec.normal_pressure(f), (lambda n: uniform_compression_energy(n, m, f)), None, {"f": f}
    if kind == "shear_strip":
        gamma = float(p["gamma"]) if "gamma" in p else float(p.get("gamma_factor", 12.0)) * m.young * C_nu * m.thickness ** 2
        return shear_load(gamma), (lambda n: shear_strip_energy(n, m, gamma)), None, {"gamma": gamma}
    if kind == "supported_edge":
        lam = float(p.get("lam", 1.0))
        load = LoadSpec.normal_pressure(-lam ** 2 * m.thickness ** 2)
        return load, (lambda n: supported_edge_energy(n, m, lam)), supported_edge_growth, {"lam": lam}
    if kind == "scaling_sawtooth":
        span = float(p["span"]) if "span" in p else float(p.get("span_factor", 2.0)) * m.young * C_nu
        return scaling_sawtooth_load(), (lambda n: scaling_sawtooth_bound(n, m, span)), None, {"span": span}
    return cfg.load.build(), None, None, {}


def _cmd_family(cfg: RunConfig, out: str) -> CommandResult:
    m = cfg.material()
    p = dict(cfg.params)
    kind = str(p.get("kind", "uniform_compression"))
    raw = p.get("indices", "1..8")
    indices = parse_index_range(raw) if isinstance(raw, str) else [float(i) for i in raw]
    load, analytic, growth, extra = _family_setup(kind, cfg, m)
    family_params = {k: v for k, v in p.items() if k not in ("kind", "indices")}
    family_params.update(extra)

    energies, bounds, instance = [], [], None
    for index in indices:
        instance = build_family(FamilySpec(kind=kind, index=index, params=family_params), m=m)
        member_m = m.with_thickness(index) if kind in ("radial_wrinkles", "tangential_wrinkles") else m
        energies.append(family_energy(instance, member_m, load, float(p.get("alpha", 0.0))))
        bounds.append(analytic(index) if analytic is not None else None)
    write_csv(
        os.path.join(out, "family.csv"),
        ["index", "energy", "analytic"],
        ((i, e, "" if b is None else b) for i, e, b in zip(indices, energies, bounds)),
    )
    dump_fields_csv(os.path.join(out, "fields.csv"), instance.grid, instance.u, instance.w)

    derived: Dict[str, Any] = {"kind": kind, **extra, "load": load.describe()}
    exit_code = EXIT_OK
    headline = f"{kind}: energies {energies[0]:.6e} .. {energies[-1]:.6e}"
    if kind in DIVERGENT_FAMILIES and len(indices) >= 3:
        cert = divergence_certificate(indices, energies, growth)
        derived["certificate"] = cert.model_dump()
        if cert.certified:
            exit_code = EXIT_DIVERGENCE
            headline += f", divergence certified (slope {cert.slope:.4e}, R^2 {cert.r_squared:.6f})"
            logger.info(f"Divergence certificate for {kind}: {cert}")
    return CommandResult(
        exit_code,
        headline,
        grid=instance.grid,
        derived=derived,
        tables={"index": indices, "energy": energies, "analytic": bounds},
    )


def _cmd_relax(cfg: RunConfig, out: str) -> CommandResult:
    m = cfg.material()
    p = cfg.params
    prestress = _prestress(cfg, m)
    kind = str(p.get("family", "radial_wrinkles"))
    alpha = float(cfg.load.alpha)
    load = prestress.load()
    family_params: Dict[str, Any] = {"a": prestress.a, "b": prestress.b, "alpha": alpha,
                                     "R1": prestress.R1, "R2": prestress.R2}
    if kind == "radial_wrinkles":
        case = prestress.case()
        if case not in ("inner_dominant", "outer_dominant"):
            raise FvKConfigError(f"Radial wrinkles need p1, p2 < 0, got case {case}")
        family_params.update({"case": case, "ntheta": cfg.grid.ntheta})
    elif kind == "tangential_wrinkles":
        family_params["nr"] = cfg.grid.nr
    else:
        raise FvKConfigError(f"relax needs family radial_wrinkles or tangential_wrinkles, got {kind!r}")
    family_params.update({k: float(p[k]) for k in ("beta_exponent", "sigma_exponent", "delta_exponent") if k in p})

    rows = []
    for h in [float(h) for h in p.get("hs", [1e-2, 1e-3])]:
        instance = build_family(FamilySpec(kind=kind, index=h, params=family_params), m=m)
        m_h = m.with_thickness(h)
        energy = family_energy(instance, m_h, load, alpha)
        relaxed = relaxed_min_energy(instance.grid, instance.u, m_h, load)
        rows.append({"h": h, "beta": instance.extras["beta"], "sigma": instance.extras["sigma"],
                     "nodes": instance.grid.n, "energy": energy, "relaxed_min": relaxed, "gap": energy - relaxed})
        logger.info(f"{kind} h={h}: energy {energy:.10e}, gap {energy - relaxed:.6e}")
    write_csv(os.path.join(out, "relax.csv"), list(rows[0]), (list(r.values()) for r in rows))

    grid = _annulus_grid(cfg)
    state = classify_state(prestress.strain(grid), m)
    write_csv(os.path.join(out, "classify.csv"), ["x1", "x2", "s1", "flag"], _classify_rows(grid, state))

    radial, tangential = prestress.strain_eigenvalues(prestress.R1)
    A = Sym2(2.0 * radial, 0.0, 2.0 * tangential)
    samples = convexify_2d(A, m.poisson, resolution=int(p.get("envelope_resolution", 61)))
    write_csv(os.path.join(out, "envelope.csv"), ["xi1", "xi2", "g", "envelope"],
              zip(samples.xi1, samples.xi2, samples.g, samples.envelope))

    gaps = [r["gap"] for r in rows]
    return CommandResult(
        EXIT_OK,
        f"{kind}: gaps {', '.join(f'{g:.4e}' for g in gaps)}",
        grid=grid,
        derived={
            "prestress": prestress.model_dump(),
            "case": prestress.case(),
            "classification": state.summary(),
            "envelope_minimum": samples.minimum,
            "envelope_closed_form_minimum": float(min_gA(A, m.poisson).value),
            "gap_ratio": gaps[-1] / gaps[0] if gaps[0] != 0 else None,
        },
        tables={"relax": rows},
    )


def _cmd_prestress(cfg: RunConfig, out: str) -> CommandResult:
    m = cfg.material()
    grid = _annulus_grid(cfg)
    prestress = _prestress(cfg, m)
    load = prestress.load(cfg.load.alpha)
    state = classify_state(prestress.strain(grid), m)
    write_csv(os.path.join(out, "classify.csv"), ["x1", "x2", "s1", "flag"], _classify_rows(grid, state))
    derived: Dict[str, Any] = {
        "prestress": prestress.model_dump(),
        "case": prestress.case(),
        "neumann_residual": neumann_residual(prestress, grid, m),
        "classification": state.summary(),
    }
    if prestress.a > 0 and prestress.b > 0:
        derived["mixed_radius"] = mixed_radius(prestress, m)

    exit_code, solve, headline = EXIT_OK, None, f"{prestress.case()} prestress, a={prestress.a:.6e}, b={prestress.b:.6e}"
    if cfg.params.get("minimize"):
        v = prestress.displacement(grid)
        bc = cfg.bc.build(grid)
        _, zeta0 = random_init(grid, bc, cfg.init_amplitude, cfg.seed)
        zeta, report = minimize_prestressed(grid, v, m, load, bc, zeta0, cfg.load.alpha, cfg.solver)
        flat = prestressed_energy(grid, v, grid.zeros_scalar(), m, load, cfg.load.alpha)
        final = prestressed_energy(grid, v, zeta, m, load, cfg.load.alpha)
        centered = zeta - np.dot(grid.weights, zeta) / grid.area
        derived.update({
            "flat_energy": flat,
            "final_energy": final,
            "max_abs_zeta_centered": float(np.max(np.abs(centered))),
            "max_abs_zeta_initial": float(np.max(np.abs(zeta0))),
        })
        dump_fields_csv(os.path.join(out, "fields.csv"), grid, v, zeta)
        solve = report.summary()
        exit_code = _solve_exit(report)
        headline += f", {report.message}"
    return CommandResult(exit_code, headline, grid=grid, solve=solve, derived=derived)


def _cmd_poincare(cfg: RunConfig, out: str) -> CommandResult:
    m = cfg.material()
    grid = cfg.grid.build()
    K = poincare_constant(grid)
    return CommandResult(
        EXIT_OK,
        f"Poincare constant {K:.10e}",
        grid=grid,
        derived={"poincare_constant": K, "compression_threshold": compression_threshold(m, grid)},
    )


def _regime(values: List[float], rtol: float) -> str:
    drops = [b < a - rtol * max(1.0, abs(a)) for a, b in zip(values, values[1:])]
    return "diverging" if drops and all(drops) else "bounded"


def _cmd_sweep(cfg: RunConfig, out: str) -> CommandResult:
    m = cfg.material()
    p = cfg.params
    hs = sorted((float(h) for h in p.get("hs", [0.1, 0.05, 0.02, 0.01])), reverse=True)
    alphas = [float(a) for a in p.get("alphas", [0.0, 2.0])]
    rtol = float(p.get("rtol", 1e-2))
    scenarios = p.get("scenarios", ["traction", "sawtooth"])

    values: Dict[tuple, List[float]] = {}
    if "traction" in scenarios:
        grid = cfg.grid.build()
        base = cfg.load.build()
        for alpha in alphas:
            for h in hs:
                _, value = solve_inplane(grid, m.with_thickness(h), base.with_alpha(alpha))
                values.setdefault(("traction", alpha), []).append(value / h ** (2 * alpha + 1))
    if "sawtooth" in scenarios:
        _, C_nu = coercivity_constants(m.poisson)
        span = float(p["span"]) if "span" in p else float(p.get("span_factor", 2.0)) * m.young * C_nu
        unit = m.with_thickness(1.0)
        members = []
        for n in range(1, int(p.get("max_index", 16)) + 1):
            if n * span <= 2.0:
                continue
            instance = family_scaling_sawtooth(n, family_grid("scaling_sawtooth", n, span=span))
            members.append((12.0 * bending_energy(instance.grid, instance.w, unit),
                            family_energy(instance, m, scaling_sawtooth_load())))
        for alpha in alphas:
            for h in hs:
                best = min(h ** (2.0 - alpha) / 12.0 * bend + relaxed for bend, relaxed in members)
                values.setdefault(("sawtooth", alpha), []).append(best)

    rows = []
    regimes = {}
    for (scenario, alpha), series in values.items():
        regime = _regime(series, rtol)
        regimes[f"{scenario}@{alpha:g}"] = regime
        rows.extend((scenario, h, alpha, value, regime) for h, value in zip(hs, series))
    write_csv(os.path.join(out, "sweep.csv"), ["scenario", "h", "alpha", "scaled_energy", "regime"], rows)
    return CommandResult(
        EXIT_OK,
        "; ".join(f"{key}: {value}" for key, value in regimes.items()),
        derived={"regimes": regimes, "hs": hs, "alphas": alphas},
        tables={"sweep": [list(r) for r in rows]},
    )


_HANDLERS: Dict[str, Callable[[RunConfig, str], CommandResult]] = {
    "energy": _cmd_energy,
    "gradcheck": _cmd_gradcheck,
    "minimize": _cmd_minimize,
    "buckle": _cmd_buckle,
    "family": _cmd_family,
    "relax": _cmd_relax,
    "prestress": _cmd_prestress,
    "poincare": _cmd_poincare,
    "sweep": _cmd_sweep,
}


# ----------------------------------------------------------------------
# argument handling
# ----------------------------------------------------------------------

def _float_list(text: str) -> List[float]:
    return [float(part) for part in text.split(",") if part.strip()]


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--preset", help="Named scenario")
    common.add_argument("--config", help="JSON configuration file")
    common.add_argument("--out", help="Output directory")
    common.add_argument("--seed", type=int)
    common.add_argument("--grid", help="Rectangle resolution NXxNY")
    common.add_argument("--annulus", help="Annulus R1,R2,nr,ntheta")
    common.add_argument("--h", type=float, dest="thickness")
    common.add_argument("--alpha", type=float)
    common.add_argument("--nu", type=float)
    common.add_argument("--E", type=float, dest="young")
    common.add_argument("--max-iters", type=int)
    common.add_argument("--amplitude", type=float)
    common.add_argument("-v", "--verbose", action="count", default=0)

    parser = _Parser(prog="fvkplate", description="Foppl-von Karman plate energies, minimizers and relaxation")
    parser.add_argument("--version", action="version", version=f"fvkplate {__version__}")
    parser.add_argument("--list-presets", action="store_true", help="Print the preset registry and exit")
    sub = parser.add_subparsers(dest="command")

    sub.add_parser("energy", parents=[common], help="Energy breakdown of a random admissible state")
    gradcheck = sub.add_parser("gradcheck", parents=[common], help="Gradient against central differences")
    gradcheck.add_argument("--trials", type=int)
    minimize_cmd = sub.add_parser("minimize", parents=[common], help="Minimize the FvK functional")
    minimize_cmd.add_argument("--f", type=float, help="Uniform normal traction")
    buckle = sub.add_parser("buckle", parents=[common], help="1D buckling eigenvalues and critical thicknesses")
    buckle.add_argument("--modes", type=int)
    buckle.add_argument("--variant", choices=("clamped", "supported", "free"))
    buckle.add_argument("--gamma", type=float)
    family = sub.add_parser("family", parents=[common], help="Evaluate an analytic family over its index")
    family.add_argument("--n", help="Indices: 1..8 or 1,2,4")
    family.add_argument("--f", type=float, help="Normal traction for uniform_compression")
    family.add_argument("--gamma", type=float)
    family.add_argument("--lam", type=float)
    family.add_argument("--span", type=float)
    for name, help_text in (("relax", "Wrinkling families against the relaxed minimum"),
                            ("prestress", "Annulus prestress, Neumann residual and classification")):
        cmd = sub.add_parser(name, parents=[common], help=help_text)
        cmd.add_argument("--p1", type=float)
        cmd.add_argument("--p2", type=float)
        if name == "relax":
            cmd.add_argument("--hs", type=_float_list)
    sub.add_parser("poincare", parents=[common], help="Poincare constant and compression threshold")
    sweep = sub.add_parser("sweep", parents=[common], help="Scaled energies over (h, alpha)")
    sweep.add_argument("--hs", type=_float_list)
    sweep.add_argument("--alphas", type=_float_list)
    return parser


def _overrides(args: argparse.Namespace) -> Dict[str, Any]:
    """Configuration fragment from explicit flags."""
    o: Dict[str, Any] = {}
    for key in ("seed", "thickness", "young"):
        if getattr(args, key, None) is not None:
            o[key] = getattr(args, key)
    if args.nu is not None:
        o["poisson"] = args.nu
    if args.alpha is not None:
        o.setdefault("load", {})["alpha"] = args.alpha
    if args.amplitude is not None:
        o["init_amplitude"] = args.amplitude
    if args.max_iters is not None:
        o["solver"] = {"max_iters": args.max_iters}
    if args.grid:
        try:
            nx, ny = (int(part) for part in args.grid.lower().split("x"))
        except ValueError:
            raise _UsageError(f"--grid expects NXxNY, got {args.grid!r}")
        o["grid"] = {"kind": "rectangle", "nx": nx, "ny": ny}
    if args.annulus:
        try:
            R1, R2, nr, ntheta = args.annulus.split(",")
            o["grid"] = {"kind": "annulus", "R1": float(R1), "R2": float(R2), "nr": int(nr), "ntheta": int(ntheta)}
        except ValueError:
            raise _UsageError(f"--annulus expects R1,R2,nr,ntheta, got {args.annulus!r}")

    params: Dict[str, Any] = {}
    for flag, key in (("trials", "trials"), ("modes", "modes"), ("variant", "variant"), ("gamma", "gamma"),
                      ("f", "f"), ("lam", "lam"), ("span", "span"), ("p1", "p1"), ("p2", "p2"),
                      ("hs", "hs"), ("alphas", "alphas"), ("n", "indices")):
        value = getattr(args, flag, None)
        if value is not None:
            params[key] = value
    if params:
        o["params"] = params
    return o


def _read_config_file(path: str) -> Dict[str, Any]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        raise FvKConfigError(f"Cannot read config {path}: {e}")
    if not isinstance(data, dict):
        raise FvKConfigError(f"Config {path} must hold a JSON object")
    return data


def run(argv: Optional[List[str]] = None) -> int:
    """
    Execute one CLI run

    Returns:
        Exit code: 0 success, 1 usage/configuration error, 2 numerical failure, 3 certified divergence
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as e:
        print(f"fvkplate: error: {e}", file=sys.stderr)
        return EXIT_USAGE

    if args.list_presets:
        for entry in list_presets():
            print(f"{entry['name']:<28} {entry['command']:<10} {entry['description']}")
        return EXIT_OK
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE

    started = time.time()
    run_context.clear()
    try:
        fvk_initialize(log_level={0: None, 1: "INFO"}.get(args.verbose, "DEBUG"))
        file_config = _read_config_file(args.config) if args.config else None
        cfg = resolve_config(args.command, args.preset, file_config, _overrides(args))
        out = args.out or os.path.join(get_config()["output_dir"], cfg.preset or cfg.command)
        os.makedirs(out, exist_ok=True)
        logger.info(f"Running {cfg.command} ({cfg.preset or 'inline'}) into {out}")
        result = _HANDLERS[cfg.command](cfg, out)

        timings = dict(run_context.get("timings", {}))
        timings["total"] = time.time() - started
        summary = RunSummary(
            command=cfg.command,
            preset=cfg.preset,
            exit_code=result.exit_code,
            config=cfg.model_dump(),
            grid=result.grid.describe() if result.grid is not None else None,
            energy=result.energy,
            solve=result.solve,
            derived=result.derived,
            tables=result.tables,
            timings=timings,
        )
        write_json(os.path.join(out, "summary.json"), summary.model_dump())
    except (FvKConfigError, ValidationError) as e:
        print(f"fvkplate: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except FvKNumericalError as e:
        logger.error(f"Numerical failure: {e}")
        print(f"fvkplate: numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    except FvKError as e:
        print(f"fvkplate: error: {e}", file=sys.stderr)
        return EXIT_NUMERICAL

    print(f"{cfg.command}: {result.headline}")
    print(f"summary written to {os.path.join(out, 'summary.json')} (exit {result.exit_code})")
    return result.exit_code


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
