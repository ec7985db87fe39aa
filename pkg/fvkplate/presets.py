"""
FvK Plate Presets Module

Run configuration models and the registry of named scenarios. A preset is a
function returning a partial configuration dictionary; ``resolve_config``
layers preset, JSON config file and command-line overrides (in that order)
and validates the result.
"""

import copy
import inspect
import logging
from typing import Any, Callable, Dict, List, Optional, Tuple, Union

from pydantic import BaseModel, Field, ValidationError, field_validator

from .energy import LoadSpec
from .exceptions import FvKConfigError
from .grid import BoundarySpec, Grid
from .material import Material, Sym2
from .solve import SolveOptions

logger = logging.getLogger(__name__)

COMMANDS = ("energy", "gradcheck", "minimize", "buckle", "family", "relax", "prestress", "poincare", "sweep")

# Global registry of named scenarios
PRESETS: Dict[str, Dict[str, Any]] = {}


class GridConfig(BaseModel):
    """Rectangle or annulus grid parameters."""
    kind: str = Field("rectangle", description="rectangle or annulus")
    x_range: Tuple[float, float] = Field((0.0, 1.0), description="Rectangle x1 range")
    y_range: Tuple[float, float] = Field((0.0, 1.0), description="Rectangle x2 range")
    nx: int = Field(17, ge=3, description="Rectangle nodes along x1")
    ny: int = Field(17, ge=3, description="Rectangle nodes along x2")
    R1: float = Field(1.0, gt=0, description="Annulus inner radius")
    R2: float = Field(2.0, gt=0, description="Annulus outer radius")
    nr: int = Field(17, ge=3, description="Annulus radial nodes")
    ntheta: int = Field(64, ge=3, description="Annulus angular nodes")

    @field_validator("kind")
    @classmethod
    def _known_kind(cls, value: str) -> str:
        if value not in ("rectangle", "annulus"):
            raise ValueError(f"Unknown grid kind {value!r}")
        return value

    def build(self) -> Grid:
        if self.kind == "rectangle":
            return Grid.rectangle(self.x_range, self.y_range, self.nx, self.ny)
        return Grid.annulus(self.R1, self.R2, self.nr, self.ntheta)


class LoadConfig(BaseModel):
    """Boundary traction and transverse load."""
    mode: str = Field("none", description="none, uniform_stress, normal_pressure or per_edge")
    stress: Optional[Tuple[float, float, float]] = Field(None, description="Constant stress (s11, s12, s22)")
    pressure: float = Field(0.0, description="Normal traction f for normal_pressure")
    edges: Dict[str, Union[float, Tuple[float, float]]] = Field(default_factory=dict, description="Per-edge traction")
    transverse: Optional[float] = Field(None, description="Uniform transverse load g")
    alpha: float = Field(0.0, ge=0, description="Load exponent: f_h = h^alpha f")

    def build(self) -> LoadSpec:
        if self.mode == "none":
            return LoadSpec("none", transverse=self.transverse, alpha=self.alpha)
        if self.mode == "uniform_stress":
            if self.stress is None:
                raise FvKConfigError("uniform_stress load needs a stress triple")
            return LoadSpec.uniform_stress(Sym2(*self.stress), alpha=self.alpha, transverse=self.transverse)
        if self.mode == "normal_pressure":
            return LoadSpec.normal_pressure(self.pressure, alpha=self.alpha, transverse=self.transverse)
        if self.mode == "per_edge":
            return LoadSpec.per_edge(self.edges, alpha=self.alpha, transverse=self.transverse)
        raise FvKConfigError(f"Unknown load mode {self.mode!r}")


class BoundaryConfig(BaseModel):
    """Boundary class with the edges forming Gamma (all edges when omitted)."""
    bc_class: str = Field("A2", description="A0, A1 or A2")
    edges: Optional[List[str]] = Field(None, description="Edge names of Gamma")

    def build(self, grid: Grid) -> BoundarySpec:
        if self.bc_class == "A2":
            return BoundarySpec.free()
        names = list(grid.edges) if self.edges is None else self.edges
        return BoundarySpec.on_edges(grid, self.bc_class, names)


class RunConfig(BaseModel):
    """Complete scenario of one CLI run."""
    command: str = Field(..., description="Subcommand")
    preset: Optional[str] = Field(None, description="Preset the run started from")
    description: str = Field("", description="Human-readable scenario description")
    young: float = Field(1.0, gt=0, description="Young modulus E")
    poisson: float = Field(0.3, gt=-1.0, lt=0.5, description="Poisson ratio nu")
    thickness: float = Field(0.1, gt=0, description="Thickness h")
    grid: GridConfig = Field(default_factory=GridConfig)
    load: LoadConfig = Field(default_factory=LoadConfig)
    bc: BoundaryConfig = Field(default_factory=BoundaryConfig)
    solver: SolveOptions = Field(default_factory=SolveOptions)
    seed: int = Field(0, description="Random seed")
    init_amplitude: Optional[float] = Field(None, ge=0, description="Relative amplitude of the random start")
    params: Dict[str, Any] = Field(default_factory=dict, description="Subcommand parameters")

    @field_validator("command")
    @classmethod
    def _known_command(cls, value: str) -> str:
        if value not in COMMANDS:
            raise ValueError(f"Unknown command {value!r}")
        return value

    def material(self) -> Material:
        return Material(young=self.young, poisson=self.poisson, thickness=self.thickness)


def register_preset(name: str, command: str, description: str) -> Callable:
    """
    Decorator registering a scenario function under ``name``

    The function takes no arguments and returns a partial RunConfig dictionary.

    Raises:
        TypeError: If applied to something other than a function
        FvKConfigError: If the name is taken or the command unknown
    """
    if command not in COMMANDS:
        raise FvKConfigError(f"Preset {name!r} names unknown command {command!r}")

    def decorator(func: Callable) -> Callable:
        if not inspect.isfunction(func):
            raise TypeError(f"@register_preset can only be used on functions, not on {func!r}")
        if name in PRESETS:
            raise FvKConfigError(f"Preset {name!r} registered twice")
        PRESETS[name] = {"command": command, "description": description, "factory": func}
        return func

    return decorator


def list_presets() -> List[Dict[str, str]]:
    return [{"name": name, "command": entry["command"], "description": entry["description"]}
            for name, entry in sorted(PRESETS.items())]


def get_preset(name: str) -> Dict[str, Any]:
    """
    Fresh configuration dictionary of a preset

    Raises:
        FvKConfigError: If the preset is unknown
    """
    if name not in PRESETS:
        raise FvKConfigError(f"Unknown preset {name!r}; available: {sorted(PRESETS)}")
    entry = PRESETS[name]
    config = copy.deepcopy(entry["factory"]())
    config.setdefault("command", entry["command"])
    config.setdefault("description", entry["description"])
    config["preset"] = name
    return config


def deep_merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    """Recursive dictionary merge; values from override win."""
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def resolve_config(
    command: str,
    preset: Optional[str] = None,
    file_config: Optional[Dict[str, Any]] = None,
    overrides: Optional[Dict[str, Any]] = None,
) -> RunConfig:
    """
    Layer preset, config file and flag overrides into a validated RunConfig

    Raises:
        FvKConfigError: On an unknown preset, a preset of another command or invalid values
    """
    base: Dict[str, Any] = {"command": command}
    if preset is not None:
        base = get_preset(preset)
        if base["command"] != command:
            raise FvKConfigError(f"Preset {preset!r} belongs to command {base['command']!r}, not {command!r}")
    if file_config:
        if file_config.get("preset") and preset is None:
            base = get_preset(file_config["preset"])
        base = deep_merge(base, {k: v for k, v in file_config.items() if k != "command"})
    if overrides:
        base = deep_merge(base, overrides)
    base["command"] = command
    try:
        return RunConfig.model_validate(base)
    except ValidationError as e:
        raise FvKConfigError(f"Invalid run configuration: {e}")


# ----------------------------------------------------------------------
# scenarios
# ----------------------------------------------------------------------

@register_preset("free_traction", "minimize", "Free rectangle under uniform outward normal traction: flat minimizer")
def _free_traction():
    return {
        "young": 1.0, "poisson": 0.3, "thickness": 0.1,
        "grid": {"kind": "rectangle", "x_range": (0.0, 2.0), "y_range": (0.0, 1.0), "nx": 64, "ny": 32},
        "load": {"mode": "normal_pressure", "pressure": 0.1},
        "bc": {"bc_class": "A2"},
        "init_amplitude": 1e-3,
        "solver": {"max_iters": 5000, "grad_tol": 1e-8},
    }


@register_preset("supported_mild_compression", "minimize",
                 "Supported unit square under normal compression 0.9 times the Poincare threshold")
def _supported_mild_compression():
    return {
        "grid": {"kind": "rectangle", "nx": 33, "ny": 33},
        "load": {"mode": "normal_pressure"},
        "bc": {"bc_class": "A1"},
        "init_amplitude": 1e-3,
        "params": {"threshold_factor": 0.9},
    }


@register_preset("supported_equilibrated", "minimize",
                 "Supported rectangle under an equilibrated tensile stress and a transverse load")
def _supported_equilibrated():
    return {
        "grid": {"kind": "rectangle", "x_range": (0.0, 1.5), "y_range": (0.0, 1.0), "nx": 25, "ny": 17},
        "load": {"mode": "uniform_stress", "stress": (0.05, 0.02, 0.1), "transverse": 0.01},
        "bc": {"bc_class": "A1"},
        "init_amplitude": 1e-3,
    }


@register_preset("clamped_annulus", "minimize", "Clamped annulus under normal traction and a transverse load")
def _clamped_annulus():
    return {
        "grid": {"kind": "annulus", "R1": 1.0, "R2": 2.0, "nr": 13, "ntheta": 48},
        "load": {"mode": "normal_pressure", "pressure": 0.05, "transverse": 0.01},
        "bc": {"bc_class": "A0"},
        "init_amplitude": 1e-3,
    }


@register_preset("compression_family", "family",
                 "Stretching-free family on (-2, 2) x (-1, 1) under normal compression twice the family threshold")
def _compression_family():
    return {"params": {"kind": "uniform_compression", "indices": "1..8", "threshold_factor": 2.0}}


@register_preset("shear_family", "family", "Stretching-free sheared strip with gamma = 12 E C_nu h^2")
def _shear_family():
    return {"params": {"kind": "shear_strip", "indices": "1..8", "gamma_factor": 12.0}}


@register_preset("supported_edge_family", "family",
                 "Parabolic family on the unit square supported on one edge under pressure -lam^2 h^2")
def _supported_edge_family():
    return {"params": {"kind": "supported_edge", "indices": "1..8", "lam": 1.0}}


@register_preset("scaling_sawtooth_family", "family",
                 "Sawtooth family on (0, a) x (0, 1) with a = 2 E C_nu, unbounded for alpha < 2")
def _scaling_sawtooth_family():
    return {"params": {"kind": "scaling_sawtooth", "indices": "1..8", "span_factor": 2.0}}


@register_preset("buckled_compression", "buckle", "Clamped strip under compression: k_n = (2 n pi)^2")
def _buckled_compression():
    return {"params": {"case": "compression", "variant": "clamped", "interval": (0.0, 1.0), "modes": 3,
                       "nodes": 400, "gamma": 1.0, "span": 1.0}}


@register_preset("buckled_shear", "buckle", "Sheared strip |x1 - x2| <= 1 with clamped profile on (-1, 1)")
def _buckled_shear():
    return {"params": {"case": "shear", "variant": "clamped", "interval": (-1.0, 1.0), "modes": 3,
                       "nodes": 401, "gamma": 1.0}}


@register_preset("radial_wrinkles", "relax",
                 "Annulus with p1 <= p2 < 0: radial wrinkles approaching the relaxed minimum")
def _radial_wrinkles():
    return {
        "grid": {"kind": "annulus", "R1": 1.0, "R2": 2.0, "ntheta": 16},
        "params": {"family": "radial_wrinkles", "p1": -2.0, "p2": -1.0, "hs": [1e-2, 1e-3, 1e-4],
                   "sigma_exponent": 1.0 / 3.0},
    }


@register_preset("flat_annulus", "prestress",
                 "Annulus under outward pressures: tensile everywhere, flat minimizer")
def _flat_annulus():
    return {
        "grid": {"kind": "annulus", "R1": 1.0, "R2": 2.0, "nr": 33, "ntheta": 64},
        "params": {"p1": 0.5, "p2": 1.0, "minimize": True},
        "init_amplitude": 1e-3,
    }


@register_preset("tangential_wrinkles", "relax",
                 "Annulus with a = 0, b < 0: tangential wrinkles approaching the relaxed minimum")
def _tangential_wrinkles():
    return {
        "grid": {"kind": "annulus", "R1": 1.0, "R2": 2.0, "nr": 33},
        "params": {"family": "tangential_wrinkles", "p1": 4.0, "p2": 1.0, "hs": [1e-1, 3e-2]},
    }


@register_preset("scaling_dichotomy", "sweep",
                 "Scaled energies over h: traction plate at alpha = 2 (bounded), sawtooth at alpha = 0 (diverging)")
def _scaling_dichotomy():
    return {
        "grid": {"kind": "rectangle", "nx": 17, "ny": 17},
        "load": {"mode": "normal_pressure", "pressure": 0.1},
        "params": {"hs": [0.1, 0.05, 0.02, 0.01], "alphas": [0.0, 2.0], "span_factor": 2.0, "max_index": 16},
    }
