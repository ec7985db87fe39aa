"""
FvK Plate: Foppl-von Karman plate energies for Python
"""

__version__ = "0.1.0"

from .core import fvk_initialize, get_config, reset_config, register_init_callback
from .context import run_context
from .exceptions import FvKError, FvKNumericalError, FvKConfigError, FvKConvergenceError, FvKDivergenceError
from .material import (
    Material,
    Sym2,
    EigPair,
    energy_density,
    energy_density_grad,
    strain_from_stress,
    eig_sym2,
    coercivity_constants,
)
from .grid import (
    Grid,
    BoundarySpec,
    grad_scalar,
    hessian_scalar,
    sym_grad_vector,
    stretching,
    divergence,
    integrate,
    boundary_integrate,
    apply_bc,
    project_bc_grad,
    satisfies_bc,
    gamma_from_edges,
    gamma_from_predicate,
    rigid_project,
    remove_rigid,
    remove_rigid_dual,
    dump_fields_csv,
)
from .energy import (
    LoadSpec,
    EnergyBreakdown,
    membrane_energy,
    bending_energy,
    stress_field,
    total_energy,
    energy_gradient,
    gradient_check,
    inplane_reference,
    scaled_energy,
    scaled_gradient,
    limit_energy,
    limit_energy_gradient,
    prestressed_energy,
    prestressed_gradient,
)
from .solve import (
    SolveOptions,
    SolveReport,
    BucklingMode,
    PSCheck,
    random_init,
    minimize,
    minimize_prestressed,
    solve_inplane,
    membrane_correction,
    uniform_ps_check,
    poincare_constant,
    compression_threshold,
    buckling_critical,
    critical_thickness,
)
from .families import (
    FAMILY_KINDS,
    FamilySpec,
    FamilyInstance,
    ScalingExponents,
    DivergenceCertificate,
    family_uniform_compression,
    family_shear_strip,
    family_supported_edge,
    family_scaling_sawtooth,
    buckled_mode,
    family_radial_wrinkles,
    family_tangential_wrinkles,
    optimal_scaling,
    family_grid,
    family_energy,
    divergence_certificate,
    build_family,
)
from .relaxation import (
    PrestressAnnulus,
    StateClass,
    EnvelopeSamples,
    g_A,
    min_gA,
    convexify_2d,
    envelope_at,
    annulus_prestress,
    neumann_residual,
    mixed_radius,
    classify_state,
    relaxed_energy,
    relaxed_min_energy,
)
from .presets import RunConfig, register_preset, get_preset, list_presets, resolve_config

__all__ = [
    # Configuration
    "fvk_initialize",
    "get_config",
    "reset_config",
    "register_init_callback",
    "run_context",
    # Errors
    "FvKError",
    "FvKNumericalError",
    "FvKConfigError",
    "FvKConvergenceError",
    "FvKDivergenceError",
    # Material
    "Material",
    "Sym2",
    "EigPair",
    "energy_density",
    "energy_density_grad",
    "strain_from_stress",
    "eig_sym2",
    "coercivity_constants",
    # Grids and fields
    "Grid",
    "BoundarySpec",
    "grad_scalar",
    "hessian_scalar",
    "sym_grad_vector",
    "stretching",
    "divergence",
    "integrate",
    "boundary_integrate",
    "apply_bc",
    "project_bc_grad",
    "satisfies_bc",
    "gamma_from_edges",
    "gamma_from_predicate",
    "rigid_project",
    "remove_rigid",
    "remove_rigid_dual",
    "dump_fields_csv",
    # Energies
    "LoadSpec",
    "EnergyBreakdown",
    "membrane_energy",
    "bending_energy",
    "stress_field",
    "total_energy",
    "energy_gradient",
    "gradient_check",
    "inplane_reference",
    "scaled_energy",
    "scaled_gradient",
    "limit_energy",
    "limit_energy_gradient",
    "prestressed_energy",
    "prestressed_gradient",
    # Solvers
    "SolveOptions",
    "SolveReport",
    "BucklingMode",
    "PSCheck",
    "random_init",
    "minimize",
    "minimize_prestressed",
    "solve_inplane",
    "membrane_correction",
    "uniform_ps_check",
    "poincare_constant",
    "compression_threshold",
    "buckling_critical",
    "critical_thickness",
    # Analytic families
    "FAMILY_KINDS",
    "FamilySpec",
    "FamilyInstance",
    "ScalingExponents",
    "DivergenceCertificate",
    "family_uniform_compression",
    "family_shear_strip",
    "family_supported_edge",
    "family_scaling_sawtooth",
    "buckled_mode",
    "family_radial_wrinkles",
    "family_tangential_wrinkles",
    "optimal_scaling",
    "family_grid",
    "family_energy",
    "divergence_certificate",
    "build_family",
    # Relaxation
    "PrestressAnnulus",
    "StateClass",
    "EnvelopeSamples",
    "g_A",
    "min_gA",
    "convexify_2d",
    "envelope_at",
    "annulus_prestress",
    "neumann_residual",
    "mixed_radius",
    "classify_state",
    "relaxed_energy",
    "relaxed_min_energy",
    # Presets
    "RunConfig",
    "register_preset",
    "get_preset",
    "list_presets",
    "resolve_config",
]
