import numpy as np
import pytest
from pydantic import ValidationError

from fvkplate import (
    FvKConfigError,
    Material,
    Sym2,
    coercivity_constants,
    eig_sym2,
    energy_density,
    energy_density_grad,
    strain_from_stress,
)


def test_density_of_uniaxial_strain(material):
    A = Sym2(0.0, 0.0, 1.0)
    assert energy_density(A, material) == pytest.approx(1.0 / (2.0 * (1.0 - 0.09)), rel=1e-14)


def test_density_of_traceless_degenerate_tensor(material):
    # Tr = 2, det = 0
    A = Sym2(1.0, -1.0, 1.0)
    assert energy_density(A, material) == pytest.approx(2.0 / (1.0 - 0.09), rel=1e-14)


def test_density_is_zero_at_zero(material):
    assert energy_density(Sym2.zeros(), material) == 0.0


def test_derivative_matches_central_difference(material):
    rng = np.random.default_rng(3)
    for _ in range(10):
        A = Sym2(*rng.standard_normal(3))
        B = Sym2(*rng.standard_normal(3))
        t = 1e-3
        # J is quadratic, so the central difference is exact up to roundoff
        fd = (energy_density(A + t * B, material) - energy_density(A - t * B, material)) / (2 * t)
        assert energy_density_grad(A, material).ddot(B) == pytest.approx(fd, rel=1e-9, abs=1e-12)


def test_strain_from_stress_inverts_derivative(material):
    S = Sym2(0.3, -0.2, 1.1)
    back = energy_density_grad(strain_from_stress(S, material), material)
    np.testing.assert_allclose([back.a11, back.a12, back.a22], [0.3, -0.2, 1.1], rtol=1e-13)


def test_density_is_half_of_stress_contraction(material):
    A = Sym2(0.4, 0.1, -0.7)
    assert energy_density(A, material) == pytest.approx(0.5 * energy_density_grad(A, material).ddot(A), rel=1e-13)


def test_density_acts_nodewise_on_fields(material):
    A = Sym2(np.array([1.0, 0.0]), np.array([0.0, 0.0]), np.array([0.0, 1.0]))
    values = energy_density(A, material)
    assert values.shape == (2,)
    np.testing.assert_allclose(values, values[0])


def test_eig_reconstructs_tensor():
    rng = np.random.default_rng(0)
    a11, a12, a22 = rng.standard_normal((3, 50))
    A = Sym2(a11, a12, a22)
    eig = eig_sym2(A)
    assert np.all(eig.lam1 <= eig.lam2)
    M = (eig.lam1[:, None, None] * np.einsum("ni,nj->nij", eig.v1, eig.v1)
         + eig.lam2[:, None, None] * np.einsum("ni,nj->nij", eig.v2, eig.v2))
    np.testing.assert_allclose(M, A.as_matrix(), atol=1e-12)
    np.testing.assert_allclose(np.einsum("ni,ni->n", eig.v1, eig.v2), 0.0, atol=1e-12)
    np.testing.assert_allclose(np.linalg.norm(eig.v1, axis=1), 1.0, rtol=1e-12)


def test_eig_of_identity_uses_canonical_axes():
    eig = eig_sym2(Sym2.identity(2.0))
    assert eig.lam1 == eig.lam2 == 2.0
    np.testing.assert_array_equal(eig.v1, [1.0, 0.0])
    np.testing.assert_array_equal(eig.v2, [0.0, 1.0])


def test_eig_of_diagonal_tensor():
    eig = eig_sym2(Sym2(3.0, 0.0, -1.0))
    assert eig.lam1 == pytest.approx(-1.0)
    assert eig.lam2 == pytest.approx(3.0)
    np.testing.assert_allclose(np.abs(eig.v1), [0.0, 1.0], atol=1e-15)


def test_coercivity_constants():
    c, C = coercivity_constants(0.3)
    assert c == pytest.approx(1.0 / 1.3)
    assert C == pytest.approx(1.0 / 0.7)
    c, C = coercivity_constants(-0.5)
    assert c == pytest.approx(2.0 / 3.0)
    assert C == pytest.approx(2.0)


@pytest.mark.parametrize("nu", [-0.9, -0.3, 0.0, 0.25, 0.49])
def test_coercivity_bounds_hold(nu):
    m = Material(young=2.0, poisson=nu, thickness=0.1)
    c, C = coercivity_constants(nu)
    rng = np.random.default_rng(7)
    A = Sym2(*rng.standard_normal((3, 200)))
    J = energy_density(A, m)
    norm2 = A.ddot(A)
    assert np.all(J >= c * m.young / 2.0 * norm2 - 1e-12)
    assert np.all(J <= C * m.young / 2.0 * norm2 + 1e-12)


@pytest.mark.parametrize("nu", [0.5, -1.0, 0.7])
def test_coercivity_rejects_poisson_out_of_range(nu):
    with pytest.raises(FvKConfigError):
        coercivity_constants(nu)


def test_material_validation():
    with pytest.raises(ValidationError):
        Material(young=1.0, poisson=0.5, thickness=0.1)
    with pytest.raises(ValidationError):
        Material(young=-1.0, poisson=0.3, thickness=0.1)
    m = Material(young=1.0, poisson=0.3, thickness=0.1).with_thickness(0.01)
    assert m.thickness == 0.01
    assert m.plane_modulus == pytest.approx(1.0 / 0.91)


@pytest.mark.parametrize("angle", [0.3, 1.0, 2.5, -0.7])
def test_density_is_invariant_under_rotation(material, angle):
    c, s = np.cos(angle), np.sin(angle)
    Q = np.array([[c, -s], [s, c]])
    A = Sym2(0.4, -0.25, -1.1)
    assert energy_density(A.rotate(Q), material) == pytest.approx(energy_density(A, material), rel=1e-12)
    S = energy_density_grad(A, material)
    np.testing.assert_allclose(energy_density_grad(A.rotate(Q), material).as_matrix(),
                               S.rotate(Q).as_matrix(), atol=1e-12)
