import numpy as np
import pytest

from grassdict import linops
from grassdict.errors import ContractError, EmptySpanError, RankDeficiencyError


def test_svd_identity_and_diagonal():
    np.testing.assert_allclose(linops.svd(np.eye(3)).singular_values, [1, 1, 1])
    np.testing.assert_allclose(linops.svd(np.diag([3.0, 2.0])).singular_values, [3, 2])


@pytest.mark.parametrize("shape", [(5, 3), (3, 5), (64, 64), (40, 7)])
def test_svd_reconstruction(rng, shape):
    a = rng.standard_normal(shape)
    res = linops.svd(a)
    u, s, v = res.left_vectors, res.singular_values, res.right_vectors
    assert np.linalg.norm(u @ np.diag(s) @ v.T - a) <= 1e-10 * max(1, np.linalg.norm(a))
    np.testing.assert_allclose(u.T @ u, np.eye(len(s)), atol=1e-10)
    np.testing.assert_allclose(v.T @ v, np.eye(len(s)), atol=1e-10)
    assert np.all(np.diff(s) <= 0) and s[-1] >= 0


def test_svd_rejects_nonfinite():
    with pytest.raises(ContractError):
        linops.svd(np.array([[1.0, np.nan]]))


def test_orthonormal_basis_examples():
    e = np.array([[1.0, 0], [0, 1], [0, 0]])
    np.testing.assert_allclose(np.abs(linops.orthonormal_basis(e)), e, atol=1e-12)
    np.testing.assert_allclose(np.abs(linops.orthonormal_basis(np.array([[2.0], [0], [0]]))), [[1], [0], [0]])
    b = linops.orthonormal_basis(np.array([[1.0, 2], [2, 4]]))
    assert b.shape == (2, 1)
    np.testing.assert_allclose(np.abs(b[:, 0]), np.array([1, 2]) / np.sqrt(5), atol=1e-12)


def test_orthonormal_basis_span(rng):
    m = rng.standard_normal((9, 3)) @ rng.standard_normal((3, 6))
    b = linops.orthonormal_basis(m)
    assert b.shape == (9, 3)
    np.testing.assert_allclose(b.T @ b, np.eye(3), atol=1e-10)
    assert np.linalg.norm(b @ b.T @ m - m) <= 1e-9 * np.linalg.norm(m)


def test_orthonormal_basis_zero():
    with pytest.raises(EmptySpanError):
        linops.orthonormal_basis(np.zeros((3, 2)))


def test_sym_eigen_examples(rng):
    values, _ = linops.sym_eigen(np.diag([1.0, 2, 3]))
    np.testing.assert_allclose(values, [1, 2, 3])
    values, _ = linops.sym_eigen(np.array([[0.0, 1], [1, 0]]))
    np.testing.assert_allclose(values, [-1, 1])
    a = rng.standard_normal((4, 4))
    a = a + a.T
    values, vectors = linops.sym_eigen(a)
    assert np.linalg.norm(a @ vectors - vectors * values) <= 1e-9 * np.linalg.norm(a)
    np.testing.assert_allclose(vectors.T @ vectors, np.eye(4), atol=1e-10)


def test_sym_eigen_asymmetric():
    with pytest.raises(ContractError):
        linops.sym_eigen(np.array([[0.0, 1], [0, 0]]))


def test_lstsq(rng):
    b = rng.standard_normal((3, 2))
    np.testing.assert_allclose(linops.lstsq(np.eye(3), b), b)
    a = rng.standard_normal((6, 3))
    x0 = rng.standard_normal(3)
    np.testing.assert_allclose(linops.lstsq(a, a @ x0), x0, atol=1e-12)
    b = rng.standard_normal(6)
    x = linops.lstsq(a, b)
    assert x.shape == (3,)
    assert np.abs(a.T @ (a @ x - b)).max() <= 1e-9


def test_lstsq_rank_deficient():
    a = np.array([[1.0, 2], [2, 4], [3, 6]])
    with pytest.raises(RankDeficiencyError):
        linops.lstsq(a, np.ones(3))
