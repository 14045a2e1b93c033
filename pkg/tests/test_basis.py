import numpy as np
import pytest

from basis import (assemble_universal_matrices, eval_basis, eval_grad_basis, lagrange_nodes, mass_condition_numbers,
                   node_count, quadrature, reference_basis, space_time_basis)
from errors import ConfigurationError


def test_p1_nodes_are_the_vertices():
    np.testing.assert_array_equal(lagrange_nodes(1), [[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]])


def test_published_node_positions():
    assert len(lagrange_nodes(2)) == 10
    np.testing.assert_allclose(lagrange_nodes(2)[5], [0.5, 0.5, 0.0])
    assert len(lagrange_nodes(3)) == 20
    np.testing.assert_allclose(lagrange_nodes(3)[19], [1 / 3, 1 / 3, 1 / 3])


def test_unsupported_degree():
    with pytest.raises(ConfigurationError):
        lagrange_nodes(4)


@pytest.mark.parametrize('N', [1, 2, 3])
def test_basis_interpolates_its_nodes(N):
    assert len(lagrange_nodes(N)) == node_count(N)
    np.testing.assert_allclose(eval_basis(N, lagrange_nodes(N)), np.eye(node_count(N)), atol=1e-13)


@pytest.mark.parametrize('N', [1, 2, 3])
def test_partition_of_unity(N):
    assert eval_basis(N, np.array([0.25, 0.25, 0.25])).sum() == pytest.approx(1.0)


def test_p2_edge_function():
    phi = eval_basis(2, np.array([0.5, 0.0, 0.0]))
    expected = np.zeros(10)
    expected[4] = 1.0
    np.testing.assert_allclose(phi, expected, atol=1e-14)


@pytest.mark.parametrize('N', [1, 2, 3])
def test_gradients_match_finite_differences(N):
    x = np.array([0.2, 0.15, 0.3])
    step = 1e-6
    grad = eval_grad_basis(N, x)
    for d in range(3):
        e = np.zeros(3)
        e[d] = step
        fd = (eval_basis(N, x + e) - eval_basis(N, x - e)) / (2 * step)
        np.testing.assert_allclose(grad[:, d], fd, atol=1e-7)


def test_quadrature_measures():
    assert quadrature('tet', 4).weights.sum() == pytest.approx(1 / 6)
    assert quadrature('triangle', 4).weights.sum() == pytest.approx(0.5)
    assert quadrature('interval', 4).weights.sum() == pytest.approx(1.0)


def test_two_point_gauss_rule():
    rule = quadrature('interval', 1)
    np.testing.assert_allclose(sorted(rule.points[:, 0]), [0.5 - 0.5 / np.sqrt(3), 0.5 + 0.5 / np.sqrt(3)])
    np.testing.assert_allclose(rule.weights, [0.5, 0.5])


def test_barycentric_integrals():
    rule = quadrature('tet', 2)
    l1 = 1.0 - rule.points.sum(axis=1)
    l2 = rule.points[:, 0]
    assert np.sum(rule.weights * l1 ** 2) == pytest.approx(1 / 60)
    assert np.sum(rule.weights * l1 * l2) == pytest.approx(1 / 120)


@pytest.mark.parametrize('domain, order', [('tet', 21), ('tet', -1), ('cube', 2)])
def test_unsupported_quadrature(domain, order):
    with pytest.raises(ConfigurationError):
        quadrature(domain, order)


def test_p1_mass_matrix():
    M = assemble_universal_matrices(1).mass
    np.testing.assert_allclose(np.diag(M), 1 / 60)
    np.testing.assert_allclose(M[~np.eye(4, dtype=bool)], 1 / 120)


@pytest.mark.parametrize('N', [1, 2, 3])
def test_derivative_matrix_sums(N):
    U = assemble_universal_matrices(N)
    rule = quadrature('tet', 2 * N)
    dphi = eval_grad_basis(N, rule.points)
    for d in range(3):
        np.testing.assert_allclose(U.stiff_space[d].sum(axis=1), 0.0, atol=1e-13)
        np.testing.assert_allclose(U.deriv[d].sum(axis=1), rule.weights @ dphi[:, :, d], atol=1e-13)


@pytest.mark.parametrize('N', [1, 2, 3])
def test_steady_predictor_fixed_point(N):
    U = assemble_universal_matrices(N)
    u = np.random.default_rng(N).normal(size=U.n_nodes)
    np.testing.assert_allclose(U.k1 @ np.tile(u, U.n_time), U.f0 @ u, atol=1e-12)


@pytest.mark.parametrize('N', [1, 2, 3])
def test_time_weights_average_constants(N):
    U = assemble_universal_matrices(N)
    assert U.time_weights.sum() == pytest.approx(1.0)
    assert U.t_tau.sum() == pytest.approx(U.n_nodes)
    assert space_time_basis(N).n_time == N + 1


@pytest.mark.parametrize('N', [1, 2])
def test_face_mass_total_is_one(N):
    U = assemble_universal_matrices(N)
    basis = reference_basis(N)
    for j in range(4):
        assert len(U.face_nodes[j]) == (N + 1) * (N + 2) // 2
        assert np.all(basis.alpha[U.face_nodes[j], j] == 0)
        assert U.face_mass[j].sum() == pytest.approx(1.0)


def test_mass_matrices_are_well_conditioned():
    cond = mass_condition_numbers()
    assert set(cond) == {1, 2, 3}
    assert all(np.isfinite(c) and c > 1.0 for c in cond.values())
