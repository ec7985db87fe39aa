import math

import numpy as np
import pytest

from fvkplate import (
    BoundarySpec,
    FvKConfigError,
    Grid,
    LoadSpec,
    Material,
    SolveOptions,
    Sym2,
    buckling_critical,
    compression_threshold,
    critical_thickness,
    membrane_correction,
    minimize,
    minimize_prestressed,
    poincare_constant,
    random_init,
    rigid_project,
    scaled_energy,
    solve_inplane,
    strain_from_stress,
    sym_grad_vector,
    total_energy,
    uniform_ps_check,
)
from fvkplate.context import run_context
from fvkplate.energy import inplane_reference
from fvkplate.relaxation import annulus_prestress


def test_inplane_solve_recovers_uniform_strain(small_rectangle, material):
    S = Sym2(0.1, 0.03, -0.05)
    load = LoadSpec.uniform_stress(S)
    u, value = solve_inplane(small_rectangle, material, load)
    E = sym_grad_vector(small_rectangle, u)
    A = strain_from_stress(S, material)
    np.testing.assert_allclose(E.a11, A.a11, atol=1e-10)
    np.testing.assert_allclose(E.a12, A.a12, atol=1e-10)
    np.testing.assert_allclose(E.a22, A.a22, atol=1e-10)
    assert value == pytest.approx(-0.5 * material.thickness * 1.5 * S.ddot(A), rel=1e-9)


def test_inplane_solve_under_pressure(unit_square, material):
    f = 0.2
    u, _ = solve_inplane(unit_square, material, LoadSpec.normal_pressure(f))
    E = sym_grad_vector(unit_square, u)
    expected = f * (1.0 - material.poisson) / material.young
    np.testing.assert_allclose(E.a11, expected, rtol=1e-9)
    np.testing.assert_allclose(E.a22, expected, rtol=1e-9)


def test_inplane_reference_is_cached_on_the_grid(unit_square, material):
    load = LoadSpec.normal_pressure(0.1)
    first = inplane_reference(unit_square, material, load)
    assert inplane_reference(unit_square, material, load) is first
    assert inplane_reference(unit_square, material, LoadSpec.normal_pressure(0.1)) is first
    assert "solve_inplane" in run_context.get("timings")


def test_inplane_reference_follows_fresh_grids_and_loads(material):
    for k in range(40):
        grid = Grid.rectangle((0.0, 1.0), (0.0, 1.0), 7, 7)
        load = LoadSpec.normal_pressure(0.1 * (1 + k))
        _, value = inplane_reference(grid, material, load)
        _, expected = solve_inplane(grid, material, load)
        assert value == pytest.approx(expected, rel=1e-12)


def test_inplane_reference_separates_loads_and_materials(unit_square, material):
    _, pulled = inplane_reference(unit_square, material, LoadSpec.normal_pressure(0.1))
    _, pushed = inplane_reference(unit_square, material, LoadSpec.normal_pressure(0.2))
    _, stiffer = inplane_reference(unit_square, Material(young=2.0, poisson=0.3, thickness=0.1),
                                   LoadSpec.normal_pressure(0.1))
    assert pushed == pytest.approx(4.0 * pulled, rel=1e-9)
    assert stiffer == pytest.approx(0.5 * pulled, rel=1e-9)


@pytest.mark.parametrize("precondition", [True, False])
def test_minimize_free_plate_under_tension_stays_flat(material, precondition):
    grid = Grid.rectangle((0.0, 1.0), (0.0, 1.0), 9, 9)
    load = LoadSpec.normal_pressure(0.1)
    bc = BoundarySpec.free()
    init = random_init(grid, bc, 1e-3, seed=0)
    opts = SolveOptions(max_iters=5000, grad_tol=1e-8, precondition=precondition)
    (u, w), report = minimize(grid, material, load, bc, init, opts)

    assert report.converged, report.message
    assert not report.diverging
    assert all(b <= a + 1e-15 for a, b in zip(report.energy_history, report.energy_history[1:]))
    assert np.max(np.abs(w - np.mean(w))) < 1e-5
    _, min_value = solve_inplane(grid, material, load)
    assert total_energy(grid, u, w, material, load).total == pytest.approx(min_value, rel=1e-6)


def test_minimize_rejects_inadmissible_start(unit_square, material):
    bc = BoundarySpec.on_edges(unit_square, "A1", ["left"])
    w = np.ones(unit_square.n)
    with pytest.raises(FvKConfigError):
        minimize(unit_square, material, LoadSpec.none(), bc, (unit_square.zeros_vector(), w))


def test_minimize_flags_divergence_below_floor(material):
    grid = Grid.rectangle((0.0, 1.0), (0.0, 1.0), 7, 7)
    bc = BoundarySpec.free()
    # a transverse load on a free plate does unbounded work on rigid lifts
    load = LoadSpec("none", transverse=1.0)
    init = random_init(grid, bc, 1e-3, seed=1)
    opts = SolveOptions(max_iters=3000, memory=0, energy_floor=-1.0)
    _, report = minimize(grid, material, load, bc, init, opts)
    assert report.diverging
    assert report.energy_history[-1] < -1.0
    assert not report.converged


def test_report_summary_truncates_history():
    from fvkplate import SolveReport
    from fvkplate.core import get_config

    report = SolveReport(iterations=3000, final_residual=1.0, energy_history=list(range(3000)), converged=False)
    summary = report.summary()
    assert len(summary["energy_history"]) == get_config()["history_limit"]
    assert summary["history_truncated"] is True


def test_minimize_free_rectangle_reaches_uniform_strain(material):
    grid = Grid.rectangle((0.0, 2.0), (0.0, 1.0), 17, 9)
    load = LoadSpec.normal_pressure(0.1)
    bc = BoundarySpec.free()
    init = random_init(grid, bc, 1e-3, seed=3)
    (u, w), report = minimize(grid, material, load, bc, init, SolveOptions(max_iters=2000))

    assert report.converged, report.message
    assert report.iterations < 500
    E = sym_grad_vector(grid, u)
    expected = 0.1 * (1.0 - material.poisson) / material.young
    np.testing.assert_allclose(E.a11, expected, rtol=1e-2)
    np.testing.assert_allclose(E.a22, expected, rtol=1e-2)
    np.testing.assert_allclose(E.a12, 0.0, atol=1e-2 * expected)
    assert report.energy_history[-1] == pytest.approx(-1.4e-3, rel=1e-4)


def test_minimize_returns_u_without_rigid_part(material):
    grid = Grid.rectangle((0.0, 1.0), (0.0, 1.0), 9, 9)
    bc = BoundarySpec.free()
    u0, w0 = random_init(grid, bc, 1e-3, seed=4)
    (u, _), _ = minimize(grid, material, LoadSpec.normal_pressure(0.1), bc, (u0, w0), SolveOptions(max_iters=50))
    np.testing.assert_allclose(rigid_project(grid, u), 0.0, atol=1e-12)


def test_report_summary_leaves_out_wall_time(material):
    grid = Grid.rectangle((0.0, 1.0), (0.0, 1.0), 7, 7)
    bc = BoundarySpec.free()
    _, report = minimize(grid, material, LoadSpec.normal_pressure(0.1), bc, random_init(grid, bc, 1e-3, seed=0))
    assert report.elapsed >= 0.0
    assert "elapsed" not in report.summary()
    assert "minimize" in run_context.get("timings")


def test_minimize_prestressed_flat_under_tension():
    m = Material(young=1.0, poisson=0.3, thickness=0.1)
    grid = Grid.annulus(1.0, 2.0, 9, 24)
    prestress = annulus_prestress(0.5, 1.0, 1.0, 2.0, m)
    v = prestress.displacement(grid)
    bc = BoundarySpec.free()
    _, zeta0 = random_init(grid, bc, 1e-3, seed=2)
    zeta, report = minimize_prestressed(grid, v, m, prestress.load(), bc, zeta0, 0.0,
                                        SolveOptions(max_iters=5000, grad_tol=1e-9))
    assert report.energy_history[-1] <= report.energy_history[0]
    centered = zeta - np.dot(grid.weights, zeta) / grid.area
    assert np.max(np.abs(centered)) < 0.1 * np.max(np.abs(zeta0))


def test_membrane_correction_of_cylindrical_profile(material):
    grid = Grid.rectangle((0.0, 1.0), (0.0, 1.0), 9, 33)
    w = grid.sample(lambda x, y: 0.5 * y ** 2)
    z, value = membrane_correction(grid, w, material)
    assert value < 1e-6
    E = sym_grad_vector(grid, z)
    interior = ~grid.boundary_mask
    np.testing.assert_allclose(E.a22[interior], -0.5 * grid.x2[interior] ** 2, atol=5e-3)


def test_uniform_ps_check_on_inextensible_sequence(material):
    grid = Grid.rectangle((0.0, 1.0), (0.0, 1.0), 9, 9)
    load = LoadSpec.none()
    w = grid.sample(lambda x, y: 0.5 * x ** 2)
    z, _ = membrane_correction(grid, w, material)
    sequence = [(eps ** 2 * z, w, eps) for eps in (1e-1, 1e-2, 1e-3)]
    checks = uniform_ps_check(grid, sequence, material, load, None, bound=1.0, min_ref=0.0)
    assert all(check.bounded for check in checks)
    assert all(np.isfinite(check.residual) for check in checks)


def test_uniform_ps_check_flags_stalled_sequence(material):
    grid = Grid.rectangle((0.0, 1.0), (0.0, 1.0), 9, 9)
    w = grid.sample(lambda x, y: np.sin(np.pi * x))
    sequence = [(grid.zeros_vector(), w, 0.5)] * 3
    checks = uniform_ps_check(grid, sequence, material, LoadSpec.none(), None, bound=1e6, min_ref=0.0)
    assert checks[0].decreasing
    assert not checks[1].decreasing and not checks[2].decreasing


def test_poincare_constant_of_unit_square():
    grid = Grid.rectangle((0.0, 1.0), (0.0, 1.0), 64, 64)
    assert poincare_constant(grid) == pytest.approx(1.0 / math.pi ** 2, rel=2e-2)


def test_poincare_constant_of_long_rectangle():
    grid = Grid.rectangle((0.0, 2.0), (0.0, 1.0), 65, 33)
    assert poincare_constant(grid) == pytest.approx(4.0 / math.pi ** 2, rel=2e-2)


def test_poincare_constant_scales_quadratically():
    small = poincare_constant(Grid.rectangle((0.0, 1.0), (0.0, 1.0), 21, 21))
    large = poincare_constant(Grid.rectangle((0.0, 3.0), (0.0, 3.0), 21, 21))
    assert large == pytest.approx(9.0 * small, rel=1e-3)


def test_compression_threshold_without_poisson_effect():
    m = Material(young=1.0, poisson=0.0, thickness=0.1)
    grid = Grid.rectangle((0.0, 1.0), (0.0, 1.0), 64, 64)
    assert compression_threshold(m, grid) == pytest.approx(-(0.01 / 12.0) * math.pi ** 2, rel=2e-2)


@pytest.mark.parametrize(
    "variant, interval, expected",
    [
        ("clamped", (0.0, 1.0), 4.0 * math.pi ** 2),
        ("supported", (0.0, 1.0), math.pi ** 2),
        ("clamped", (-1.0, 1.0), math.pi ** 2),
    ],
)
def test_buckling_critical_values(variant, interval, expected):
    modes = buckling_critical(variant, interval, n_modes=2, n_nodes=400)
    assert modes[0].k == pytest.approx(expected, rel=5e-3)
    assert modes[1].k > modes[0].k
    assert np.max(np.abs(modes[0].shape)) == pytest.approx(1.0)


def test_clamped_modes_grow_like_squares():
    modes = buckling_critical("clamped", (0.0, 1.0), n_modes=3, n_nodes=400)
    # symmetric modes are k = (2 n pi)^2
    assert modes[0].k == pytest.approx(4.0 * math.pi ** 2, rel=5e-3)
    assert all(a.k < b.k for a, b in zip(modes, modes[1:]))


def test_free_variant_discards_affine_modes():
    modes = buckling_critical("free", (0.0, 1.0), n_modes=1, n_nodes=400)
    assert modes[0].k > 1.0


def test_buckling_rejects_unknown_variant():
    with pytest.raises(FvKConfigError):
        buckling_critical("hinged", (0.0, 1.0))


def test_critical_thickness_inverts_eigenvalue(material):
    k = 4.0 * math.pi ** 2
    h = critical_thickness(k, 1.0, material, "compression", span=1.0)
    assert h == pytest.approx(math.sqrt(12.0 * (1.0 - 0.09) / k), rel=1e-12)
