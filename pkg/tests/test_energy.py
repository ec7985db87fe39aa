import numpy as np
import pytest

from fvkplate import (
    BoundarySpec,
    FvKConfigError,
    FvKNumericalError,
    Grid,
    LoadSpec,
    Material,
    Sym2,
    bending_energy,
    energy_density,
    energy_gradient,
    gradient_check,
    limit_energy,
    limit_energy_gradient,
    membrane_energy,
    prestressed_energy,
    prestressed_gradient,
    random_init,
    scaled_energy,
    scaled_gradient,
    solve_inplane,
    strain_from_stress,
    total_energy,
)


def _linear_field(grid, A):
    return np.stack([A.a11 * grid.x1 + A.a12 * grid.x2, A.a12 * grid.x1 + A.a22 * grid.x2])


def _random_state(grid, seed, amplitude=0.05):
    return random_init(grid, BoundarySpec.free(), amplitude, seed)


def test_flat_unloaded_state_has_zero_energy(small_rectangle, material):
    grid = small_rectangle
    breakdown = total_energy(grid, grid.zeros_vector(), grid.zeros_scalar(), material, LoadSpec.none())
    assert breakdown.total == 0.0
    assert breakdown.membrane == breakdown.bending == 0.0


def test_membrane_energy_of_uniform_strain(small_rectangle, material):
    A = Sym2(0.01, -0.003, 0.02)
    u = _linear_field(small_rectangle, A)
    expected = material.thickness * 1.5 * energy_density(A, material)
    assert membrane_energy(small_rectangle, u, small_rectangle.zeros_scalar(), material) == pytest.approx(expected, rel=1e-12)


def test_bending_energy_of_cylinder(small_rectangle, material):
    w = small_rectangle.sample(lambda x, y: 0.5 * x ** 2)
    h = material.thickness
    expected = h ** 3 / 12.0 * 1.5 * material.young / (2.0 * (1.0 - material.poisson ** 2))
    assert bending_energy(small_rectangle, w, material) == pytest.approx(expected, rel=1e-10)


def test_uniform_stress_work_identity(small_rectangle, material):
    grid = small_rectangle
    S = Sym2(0.2, 0.05, -0.1)
    A = Sym2(0.01, 0.02, -0.03)
    load = LoadSpec.uniform_stress(S)
    breakdown = total_energy(grid, _linear_field(grid, A), grid.zeros_scalar(), material, load)
    assert breakdown.load_work_inplane == pytest.approx(material.thickness * 1.5 * S.ddot(A), rel=1e-12)


def test_load_exponent_scales_work(small_rectangle, material):
    grid = small_rectangle
    u, w = _random_state(grid, 0)
    load = LoadSpec.normal_pressure(0.3)
    base = total_energy(grid, u, w, material, load).load_work_inplane
    scaled = total_energy(grid, u, w, material, load.with_alpha(2.0)).load_work_inplane
    assert scaled == pytest.approx(material.thickness ** 2 * base, rel=1e-12)


def test_transverse_load_work(small_rectangle, material):
    grid = small_rectangle
    w = np.full(grid.n, 0.2)
    breakdown = total_energy(grid, grid.zeros_vector(), w, material, LoadSpec("none", transverse=0.5))
    assert breakdown.load_work_transverse == pytest.approx(material.thickness * 0.5 * 0.2 * 1.5, rel=1e-12)


@pytest.mark.parametrize("shape", [(8, 8), (6, 12)])
def test_gradient_matches_finite_differences_on_rectangles(shape, material):
    grid = Grid.rectangle((0.0, 1.0), (0.0, 1.0), *shape)
    load = LoadSpec.uniform_stress(Sym2(0.1, -0.05, 0.2), transverse=0.02)
    for seed in range(3):
        u, w = _random_state(grid, seed)
        assert gradient_check(grid, u, w, material, load) < 1e-6


def test_gradient_matches_finite_differences_on_annulus(small_annulus, material):
    load = LoadSpec.per_edge({"inner": -0.2, "outer": 0.1}, alpha=1.0)
    u, w = _random_state(small_annulus, 5)
    assert gradient_check(small_annulus, u, w, material, load) < 1e-6


def test_gradient_respects_boundary_projection(unit_square, material):
    grid = unit_square
    bc = BoundarySpec.on_edges(grid, "A1", ["left", "right", "bottom", "top"])
    u, w = random_init(grid, bc, 0.05, 0)
    _, gw = energy_gradient(grid, u, w, material, LoadSpec.normal_pressure(0.1), bc)
    assert np.max(np.abs(gw[grid.boundary_mask])) < 1e-14


def test_non_finite_input_is_rejected(small_rectangle, material):
    u = small_rectangle.zeros_vector()
    u[0, 2] = np.inf
    with pytest.raises(FvKNumericalError):
        total_energy(small_rectangle, u, small_rectangle.zeros_scalar(), material, LoadSpec.none())


def test_load_spec_validation(small_rectangle):
    with pytest.raises(FvKConfigError):
        LoadSpec.none(alpha=-1.0)
    with pytest.raises(FvKConfigError):
        LoadSpec("gravity")
    with pytest.raises(FvKConfigError):
        LoadSpec.per_edge({"north": 1.0}).inplane_vector(small_rectangle)


def test_equilibrium_detection(small_rectangle, small_annulus):
    assert LoadSpec.uniform_stress(Sym2(0.1, 0.2, 0.3)).is_equilibrated(small_rectangle)
    assert LoadSpec.per_edge({"inner": -2.0, "outer": -1.0}).is_equilibrated(small_annulus)
    assert not LoadSpec.per_edge({"left": (1.0, 0.0)}).is_equilibrated(small_rectangle)


def test_scaled_energy_vanishes_at_inplane_minimizer(unit_square, material):
    load = LoadSpec.normal_pressure(0.1)
    u_star, min_value = solve_inplane(unit_square, material, load)
    value = scaled_energy(unit_square, u_star, unit_square.zeros_scalar(), material, load, 1.0, min_value)
    assert abs(value) < 1e-12


def test_scaled_energy_uses_cached_reference(unit_square, material):
    load = LoadSpec.normal_pressure(0.1)
    u_star, _ = solve_inplane(unit_square, material, load)
    w = unit_square.sample(lambda x, y: np.sin(np.pi * x) * np.sin(np.pi * y))
    first = scaled_energy(unit_square, u_star, w, material, load, 0.1)
    second = scaled_energy(unit_square, u_star, w, material, load, 0.1)
    assert first == second
    assert first > 0.0


def test_scaled_gradient_is_consistent(small_rectangle, material):
    grid = small_rectangle
    load = LoadSpec.normal_pressure(-0.05)
    u, w = _random_state(grid, 2)
    eps = 0.3
    gu, gw = scaled_gradient(grid, u, w, material, load, eps)
    rng = np.random.default_rng(9)
    du, dw = rng.standard_normal((2, grid.n)), rng.standard_normal(grid.n)
    t = 1e-6

    def value(s):
        return scaled_energy(grid, u + s * du, w + s * dw, material, load, eps, min_ref=0.0)

    fd = (value(t) - value(-t)) / (2 * t)
    assert np.sum(gu * du) + np.dot(gw, dw) == pytest.approx(fd, rel=1e-6)


def test_scaled_energy_rejects_nonpositive_eps(small_rectangle, material):
    with pytest.raises(FvKConfigError):
        scaled_energy(small_rectangle, small_rectangle.zeros_vector(), small_rectangle.zeros_scalar(),
                      material, LoadSpec.none(), 0.0, 0.0)


def test_limit_energy_under_uniaxial_compression(material):
    grid = Grid.rectangle((0.0, 1.0), (0.0, 1.0), 5, 33)
    gamma = 1.0
    u_star = _linear_field(grid, strain_from_stress(Sym2(0.0, 0.0, -gamma), material))
    w = grid.sample(lambda x, y: y ** 2)
    h = material.thickness
    bending = material.young * h ** 3 / (24.0 * (1.0 - material.poisson ** 2)) * 4.0
    membrane = -h * gamma / 2.0 * 4.0 / 3.0
    assert limit_energy(grid, u_star, w, material) == pytest.approx(bending + membrane, rel=1e-2)


def test_limit_energy_gradient_is_consistent(small_rectangle, material):
    grid = small_rectangle
    u_star = _linear_field(grid, Sym2(-0.1, 0.05, 0.02))
    _, w = _random_state(grid, 4)
    dw = np.random.default_rng(11).standard_normal(grid.n)
    t = 1e-5
    fd = (limit_energy(grid, u_star, w + t * dw, material) - limit_energy(grid, u_star, w - t * dw, material)) / (2 * t)
    assert np.dot(limit_energy_gradient(grid, u_star, w, material), dw) == pytest.approx(fd, rel=1e-7)


def test_prestressed_energy_is_rescaled_fvk_energy(small_annulus, material):
    grid = small_annulus
    load = LoadSpec.per_edge({"inner": -0.5, "outer": 0.2})
    v, zeta = _random_state(grid, 6, amplitude=0.1)
    alpha = 1.5
    h = material.thickness
    expected = total_energy(grid, h ** alpha * v, h ** (alpha / 2.0) * zeta, material, load.with_alpha(alpha)).total
    assert prestressed_energy(grid, v, zeta, material, load, alpha) == pytest.approx(expected, rel=1e-10)
    scaled = prestressed_energy(grid, v, zeta, material, load, alpha, scaled=True)
    assert scaled == pytest.approx(expected / h ** (2 * alpha + 1), rel=1e-10)


def test_prestressed_gradient_is_consistent(small_annulus, material):
    grid = small_annulus
    load = LoadSpec.per_edge({"inner": -0.5, "outer": 0.2})
    v, zeta = _random_state(grid, 8, amplitude=0.1)
    alpha = 0.5
    direction = np.random.default_rng(12).standard_normal(grid.n)
    t = 1e-6
    fd = (prestressed_energy(grid, v, zeta + t * direction, material, load, alpha)
          - prestressed_energy(grid, v, zeta - t * direction, material, load, alpha)) / (2 * t)
    grad = prestressed_gradient(grid, v, zeta, material, alpha)
    assert np.dot(grad, direction) == pytest.approx(fd, rel=1e-6)


def test_energy_breakdown_composition(small_rectangle):
    m = Material(young=3.0, poisson=0.2, thickness=0.05)
    u, w = _random_state(small_rectangle, 1)
    b = total_energy(small_rectangle, u, w, m, LoadSpec.normal_pressure(0.1, transverse=0.3))
    assert b.total == pytest.approx(b.membrane + b.bending - b.load_work_inplane - b.load_work_transverse)


def test_total_energy_ignores_rigid_motions_under_equilibrated_load(small_rectangle, material):
    grid = small_rectangle
    load = LoadSpec.normal_pressure(0.2, transverse=0.01)
    u, w = _random_state(grid, seed=11)
    base = total_energy(grid, u, w, material, load).total
    for c in ([0.3, 0.0, 0.0], [0.0, -0.2, 0.0], [0.1, 0.4, 0.05]):
        shifted = u + c[0] * np.stack([np.ones(grid.n), np.zeros(grid.n)]) \
            + c[1] * np.stack([np.zeros(grid.n), np.ones(grid.n)]) \
            + c[2] * np.stack([-grid.x2, grid.x1])
        assert total_energy(grid, shifted, w, material, load).total == pytest.approx(base, rel=1e-10, abs=1e-14)


def test_pressure_work_matches_boundary_traction(material):
    # the volume form sum_q S:E(u) and the boundary trapezoid agree on linear fields
    grid = Grid.rectangle((0.0, 1.5), (0.0, 1.0), 9, 7)
    f = 0.3
    A = Sym2(0.2, -0.1, 0.35)
    u = _linear_field(grid, A) + np.stack([0.5 - 0.2 * grid.x2, 0.1 + 0.2 * grid.x1])
    volume = np.sum(LoadSpec.normal_pressure(f).inplane_vector(grid) * u)
    edges = LoadSpec.per_edge({name: f for name in grid.edges})
    boundary = np.sum(edges.inplane_vector(grid) * u)
    assert volume == pytest.approx(boundary, rel=1e-12)
    assert volume == pytest.approx(f * 1.5 * A.trace(), rel=1e-12)

    annulus = Grid.annulus(1.0, 2.0, 9, 128)
    v = _linear_field(annulus, A)
    volume = np.sum(LoadSpec.normal_pressure(f).inplane_vector(annulus) * v)
    boundary = np.sum(LoadSpec.per_edge({"inner": f, "outer": f}).inplane_vector(annulus) * v)
    assert volume == pytest.approx(boundary, rel=1e-3)


def test_total_energy_ignores_translations_on_annulus(small_annulus, material):
    grid = small_annulus
    load = LoadSpec.per_edge({"inner": -2.0, "outer": -1.0}, transverse=0.01)
    u, w = _random_state(grid, seed=12)
    base = total_energy(grid, u, w, material, load).total
    shifted = u + np.array([[0.25], [-0.4]])
    assert total_energy(grid, shifted, w, material, load).total == pytest.approx(base, rel=1e-10, abs=1e-14)
