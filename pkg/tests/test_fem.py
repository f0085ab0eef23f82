import numpy as np
import pytest
from numpy.polynomial import legendre

from core.fem import (
    evaluate,
    gauss_rule,
    h1_project,
    l2_norm,
    l2_project,
    lobatto_nodes,
    make_basis,
    projection_error,
    refine,
    test_indices as fem_test_indices,
    trial_at_points,
    uniform_mesh,
)
from utils.validators import ValidationError


def test_gauss_rule_integrates_polynomials():
    rule = gauss_rule(2)
    x = 0.5 * (rule.points + 1.0)
    assert np.isclose(0.5 * np.sum(rule.weights * x ** 2), 1.0 / 3.0)
    assert rule.degree == 3
    with pytest.raises(ValidationError):
        gauss_rule(0)


@pytest.mark.parametrize("degree", [2, 3, 4, 5])
def test_lobatto_nodes_are_roots_of_legendre_derivative(degree):
    nodes = lobatto_nodes(degree)
    assert nodes[0] == -1.0 and nodes[-1] == 1.0
    derivative = legendre.legder(np.eye(degree + 1)[degree])
    np.testing.assert_allclose(legendre.legval(nodes[1:-1], derivative), 0.0, atol=1e-12)
    np.testing.assert_allclose(nodes, -nodes[::-1], atol=1e-15)


@pytest.mark.parametrize("degree", [1, 2, 3, 4])
def test_nodal_basis(degree):
    basis = make_basis(degree)
    np.testing.assert_allclose(basis.trial(basis.nodes), np.eye(degree + 1), atol=1e-13)
    xi = np.linspace(-1.0, 1.0, 7)
    np.testing.assert_allclose(basis.trial(xi).sum(axis=1), 1.0, atol=1e-13)
    np.testing.assert_allclose(basis.trial_derivative(xi).sum(axis=1), 0.0, atol=1e-11)


def test_reference_matrices_for_linear_elements():
    basis = make_basis(1)
    np.testing.assert_allclose(basis.reference_mass, [[1.0, 1.0]])
    np.testing.assert_allclose(basis.reference_gradient, [[-1.0, 1.0]])
    np.testing.assert_allclose(basis.reference_projection, [[0.5, 0.5]])


def test_degree_must_be_positive():
    with pytest.raises(ValidationError):
        make_basis(0)


@pytest.mark.parametrize("degree", [1, 2, 3, 4])
def test_commuting_diagram(degree, rng):
    """d/dx I_h v equals pi_h v' elementwise"""
    basis = make_basis(degree)
    mesh = uniform_mesh('e', 1.3, 5)
    for _ in range(20):
        freq, shift = rng.uniform(0.5, 4.0), rng.uniform(-1.0, 1.0)
        v = lambda x: np.sin(freq * x + shift)
        dv = lambda x: freq * np.cos(freq * x + shift)

        coeffs = h1_project(v, mesh, basis)
        element_coeffs = coeffs[np.arange(mesh.n_elements)[:, None] * degree + np.arange(degree + 1)[None, :]]
        derivative_moments = element_coeffs @ basis.reference_gradient.T
        derivative = derivative_moments / ((0.5 * mesh.sizes)[:, None] * basis.test_norms[None, :])

        expected = l2_project(dv, mesh, basis).reshape(mesh.n_elements, degree)
        assert np.max(np.abs(derivative - expected)) <= 1e-12 * np.max(np.abs(expected))


@pytest.mark.parametrize("degree", [1, 2, 3])
def test_projections_reproduce_polynomials(degree):
    basis = make_basis(degree)
    mesh = uniform_mesh('e', 2.0, 3)
    polynomial = lambda x: 1.0 + 0.5 * x ** degree - x
    coeffs = h1_project(polynomial, mesh, basis)
    x = np.linspace(0.0, 2.0, 17)
    np.testing.assert_allclose(evaluate(coeffs, mesh, basis, x), polynomial(x), atol=1e-12)
    assert projection_error(polynomial, mesh, basis, 'H1') < 1e-12

    lower = lambda x: 2.0 - x ** (degree - 1)
    assert projection_error(lower, mesh, basis, 'L2') < 1e-12


@pytest.mark.parametrize("degree", [1, 2, 3])
def test_h1_projection_rate(degree):
    basis = make_basis(degree)
    v = lambda x: np.exp(x) * np.sin(3.0 * x)
    errors = [projection_error(v, uniform_mesh('e', 1.0, n), basis, 'H1') for n in (8, 16)]
    assert np.log2(errors[0] / errors[1]) == pytest.approx(degree + 1, abs=0.2)


@pytest.mark.parametrize("degree", [1, 2, 3])
def test_projections_are_idempotent(degree):
    basis = make_basis(degree)
    mesh = uniform_mesh('e', 1.5, 4)
    v = lambda x: np.exp(x) * np.sin(3.0 * x)

    trial = h1_project(v, mesh, basis)
    continuous = lambda x: evaluate(trial, mesh, basis, np.ravel(x)).reshape(np.shape(x))
    np.testing.assert_allclose(h1_project(continuous, mesh, basis), trial,
                               rtol=1e-12, atol=1e-12)

    test = l2_project(v, mesh, basis)
    table = test[fem_test_indices(mesh.n_elements, degree)]

    def piecewise(x):
        element, xi = mesh.locate(np.ravel(x))
        return np.sum(basis.test(xi) * table[element], axis=1).reshape(np.shape(x))

    np.testing.assert_allclose(l2_project(piecewise, mesh, basis), test, rtol=1e-12, atol=1e-12)


def test_l2_projection_rate():
    basis = make_basis(2)
    v = lambda x: np.sin(np.pi * x)
    errors = [projection_error(v, uniform_mesh('e', 1.0, n), basis, 'L2') for n in (8, 16, 32)]
    rates = np.log2(np.array(errors[:-1]) / np.array(errors[1:]))
    np.testing.assert_allclose(rates, 2.0, atol=0.1)


def test_h1_projection_without_derivative_matches_with_derivative():
    basis = make_basis(3)
    mesh = uniform_mesh('e', 1.0, 4)
    v, dv = np.cos, lambda x: -np.sin(x)
    np.testing.assert_allclose(h1_project(v, mesh, basis), h1_project(v, mesh, basis, dv), atol=1e-12)


def test_trial_at_points_is_continuous_across_elements():
    basis = make_basis(2)
    mesh = uniform_mesh('e', 1.0, 3)
    coeffs = h1_project(np.sin, mesh, basis)
    values = trial_at_points(coeffs, mesh, basis, np.array([-1.0, 1.0]))
    np.testing.assert_allclose(values[1:, 0], values[:-1, 1], atol=1e-14)


def test_refine():
    mesh = uniform_mesh('e', 1.0, 3)
    fine = refine(mesh)
    assert fine.n_elements == 6
    assert fine.is_refinement_of(mesh)
    assert not mesh.is_refinement_of(fine)
    assert not uniform_mesh('e', 1.0, 4).is_refinement_of(mesh)


def test_mesh_validation():
    with pytest.raises(ValidationError):
        uniform_mesh('e', 1.0, 0)
    mesh = uniform_mesh('e', 1.0, 2)
    with pytest.raises(ValidationError):
        type(mesh)('e', np.array([0.0, 0.6, 0.5, 1.0]))


def test_l2_norm():
    mesh = uniform_mesh('e', 2.0, 3)
    assert l2_norm(lambda x: np.ones_like(x), mesh, 2) == pytest.approx(np.sqrt(2.0))
