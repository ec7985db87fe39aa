import math

import numpy as np
import pytest

from fvkplate import (
    BoundarySpec,
    FvKConfigError,
    FvKNumericalError,
    Grid,
    apply_bc,
    boundary_integrate,
    divergence,
    dump_fields_csv,
    grad_scalar,
    hessian_scalar,
    integrate,
    project_bc_grad,
    remove_rigid,
    remove_rigid_dual,
    rigid_project,
    satisfies_bc,
    sym_grad_vector,
)


def test_rectangle_layout(small_rectangle):
    grid = small_rectangle
    assert grid.n == 63
    assert grid.shape == (9, 7)
    assert set(grid.edges) == {"left", "right", "bottom", "top"}
    # C-order: x1 is the slow axis
    assert grid.x1[0] == grid.x1[6] == 0.0
    assert grid.x2[1] == pytest.approx(1.0 / 6.0)
    assert grid.area == pytest.approx(1.5)
    assert int(np.count_nonzero(grid.boundary_mask)) == 2 * 9 + 2 * 7 - 4


def test_annulus_area_and_perimeter(small_annulus):
    grid = small_annulus
    assert integrate(grid, np.ones(grid.n)) == pytest.approx(3.0 * math.pi, rel=1e-12)
    assert boundary_integrate(grid, np.ones(grid.n)) == pytest.approx(6.0 * math.pi, rel=1e-12)
    assert boundary_integrate(grid, np.ones(grid.n), ["inner"]) == pytest.approx(2.0 * math.pi, rel=1e-12)


def test_rectangle_perimeter(small_rectangle):
    assert boundary_integrate(small_rectangle, np.ones(small_rectangle.n)) == pytest.approx(5.0)


@pytest.mark.parametrize("bad", [((0.0, 1.0), (0.0, 1.0), 2, 5), ((1.0, 1.0), (0.0, 1.0), 5, 5)])
def test_rectangle_rejects_degenerate_input(bad):
    with pytest.raises(FvKConfigError):
        Grid.rectangle(*bad)


def test_annulus_rejects_bad_radii():
    with pytest.raises(FvKConfigError):
        Grid.annulus(2.0, 1.0, 9, 16)


def test_derivatives_exact_on_quadratics(small_rectangle):
    grid = small_rectangle
    w = grid.sample(lambda x, y: x ** 2 + 3.0 * x * y - 2.0 * y ** 2 + x)
    dw = grad_scalar(grid, w)
    np.testing.assert_allclose(dw[0], 2.0 * grid.x1 + 3.0 * grid.x2 + 1.0, atol=1e-11)
    np.testing.assert_allclose(dw[1], 3.0 * grid.x1 - 4.0 * grid.x2, atol=1e-11)
    H = hessian_scalar(grid, w)
    np.testing.assert_allclose(H.a11, 2.0, atol=1e-9)
    np.testing.assert_allclose(H.a12, 3.0, atol=1e-9)
    np.testing.assert_allclose(H.a22, -4.0, atol=1e-9)


def test_second_derivative_rows_exact_on_cubics(small_rectangle):
    grid = small_rectangle
    w = grid.sample(lambda x, y: x ** 3)
    np.testing.assert_allclose(hessian_scalar(grid, w).a11, 6.0 * grid.x1, atol=1e-8)


def test_strain_and_divergence_of_linear_field(small_rectangle):
    grid = small_rectangle
    u = np.stack([0.2 * grid.x1 + 0.1 * grid.x2, 0.3 * grid.x1 - 0.5 * grid.x2])
    E = sym_grad_vector(grid, u)
    np.testing.assert_allclose(E.a11, 0.2, atol=1e-12)
    np.testing.assert_allclose(E.a12, 0.2, atol=1e-12)
    np.testing.assert_allclose(E.a22, -0.5, atol=1e-12)
    np.testing.assert_allclose(divergence(grid, u), -0.3, atol=1e-12)


def test_annulus_gradient_of_coordinate():
    grid = Grid.annulus(1.0, 2.0, 9, 64)
    dw = grad_scalar(grid, grid.x1.copy())
    np.testing.assert_allclose(dw[0], 1.0, atol=2e-3)
    np.testing.assert_allclose(dw[1], 0.0, atol=2e-3)


def test_annulus_gradient_of_radial_function():
    grid = Grid.annulus(1.0, 2.0, 41, 32)
    dw = grad_scalar(grid, grid.r ** 2)
    # radial functions see no angular differences
    np.testing.assert_allclose(dw[0], 2.0 * grid.x1, atol=1e-10)
    np.testing.assert_allclose(dw[1], 2.0 * grid.x2, atol=1e-10)


def test_shape_and_finiteness_checks(small_rectangle):
    with pytest.raises(FvKConfigError):
        grad_scalar(small_rectangle, np.zeros(5))
    w = np.zeros(small_rectangle.n)
    w[3] = np.nan
    with pytest.raises(FvKNumericalError):
        grad_scalar(small_rectangle, w)


def test_supported_projection_zeroes_gamma(unit_square):
    grid = unit_square
    bc = BoundarySpec.on_edges(grid, "A1", ["left", "right"])
    w = apply_bc(grid, np.random.default_rng(0).standard_normal(grid.n), bc)
    assert np.max(np.abs(w[bc.gamma])) < 1e-13
    assert satisfies_bc(grid, w, bc)
    np.testing.assert_allclose(apply_bc(grid, w, bc), w, atol=1e-13)


def test_clamped_projection_kills_normal_derivative(unit_square):
    grid = unit_square
    bc = BoundarySpec.on_edges(grid, "A0", ["left", "right", "bottom", "top"])
    w = apply_bc(grid, np.random.default_rng(1).standard_normal(grid.n), bc)
    assert np.max(np.abs(w[grid.boundary_mask])) < 1e-12
    dw = grad_scalar(grid, w)
    left = grid.edges["left"].nodes[1:-1]
    bottom = grid.edges["bottom"].nodes[1:-1]
    assert np.max(np.abs(dw[0][left])) < 1e-10
    assert np.max(np.abs(dw[1][bottom])) < 1e-10
    assert satisfies_bc(grid, w, bc)


def test_projection_is_orthogonal(unit_square):
    grid = unit_square
    bc = BoundarySpec.on_edges(grid, "A0", ["top"])
    rng = np.random.default_rng(2)
    x, y = rng.standard_normal((2, grid.n))
    px = apply_bc(grid, x, bc)
    # P is symmetric: <P x, y> = <x, P y>
    assert np.dot(px, y) == pytest.approx(np.dot(x, project_bc_grad(grid, y, bc)), rel=1e-10)


def test_free_boundary_is_identity(unit_square):
    w = np.random.default_rng(3).standard_normal(unit_square.n)
    np.testing.assert_array_equal(apply_bc(unit_square, w, BoundarySpec.free()), w)
    assert satisfies_bc(unit_square, w, BoundarySpec.free())


def test_boundary_spec_validation(unit_square):
    with pytest.raises(FvKConfigError):
        BoundarySpec("A3", None)
    with pytest.raises(FvKConfigError):
        BoundarySpec("A1", np.zeros(unit_square.n, dtype=bool))
    with pytest.raises(FvKConfigError):
        BoundarySpec.on_edges(unit_square, "A1", ["north"])


def test_predicate_gamma_is_restricted_to_boundary(unit_square):
    bc = BoundarySpec.from_predicate(unit_square, "A1", lambda x, y: x <= 0.5)
    assert not np.any(bc.gamma & ~unit_square.boundary_mask)
    assert np.all(unit_square.x1[bc.gamma] <= 0.5)


def test_rigid_projection(small_rectangle):
    grid = small_rectangle
    rigid = np.stack([0.3 - 0.7 * grid.x2, -1.2 + 0.7 * grid.x1])
    np.testing.assert_allclose(rigid_project(grid, rigid), rigid, atol=1e-12)
    E = sym_grad_vector(grid, rigid)
    assert max(np.max(np.abs(E.a11)), np.max(np.abs(E.a12)), np.max(np.abs(E.a22))) < 1e-12

    u = np.random.default_rng(4).standard_normal((2, grid.n))
    free = remove_rigid(grid, u)
    np.testing.assert_allclose(rigid_project(grid, free), 0.0, atol=1e-12)


def test_remove_rigid_dual_is_transpose_of_remove_rigid(small_annulus):
    grid = small_annulus
    rng = np.random.default_rng(5)
    g, v = rng.standard_normal((2, 2, grid.n))
    gauged = remove_rigid_dual(grid, g)
    assert np.sum(gauged * v) == pytest.approx(np.sum(g * remove_rigid(grid, v)), rel=1e-10)
    np.testing.assert_allclose(rigid_project(grid, gauged / grid.weights), 0.0, atol=1e-10)
    np.testing.assert_allclose(remove_rigid_dual(grid, gauged), gauged, atol=1e-12)


def test_annulus_operators_are_periodic_in_theta():
    nr, ntheta = 9, 64
    grid = Grid.annulus(1.0, 2.0, nr, ntheta)
    w = grid.sample(lambda x, y: x ** 3 - 2.0 * x * y + np.sin(3.0 * y))

    def rotate(v):
        # theta is the fast axis; one roll turns the field by one angular step
        return np.roll(v.reshape(nr, ntheta), 1, axis=1).ravel()

    def laplacian(v):
        H = hessian_scalar(grid, v)
        return H.a11 + H.a22

    def slope_squared(v):
        g = grad_scalar(grid, v)
        return g[0] ** 2 + g[1] ** 2

    for op in (laplacian, slope_squared):
        expected = rotate(op(w))
        np.testing.assert_allclose(op(rotate(w)), expected, atol=1e-9 * np.max(np.abs(expected)))

    # the seam theta = 0 is an ordinary interior column
    error = np.abs(grid.D2 @ grid.x2 - 1.0)
    seam = grid.theta == 0.0
    assert np.max(error) < 5e-3
    assert np.max(error[seam]) <= np.max(error[~seam]) + 1e-12


def test_dump_fields_csv(tmp_path, small_rectangle):
    grid = small_rectangle
    path = tmp_path / "fields.csv"
    w = grid.sample(lambda x, y: x * y)
    dump_fields_csv(str(path), grid, w=w)
    lines = path.read_text().splitlines()
    assert lines[0] == "x1,x2,u1,u2,w"
    assert len(lines) == grid.n + 1
    data = np.loadtxt(str(path), delimiter=",", skiprows=1)
    np.testing.assert_array_equal(data[:, 4], w)
