import numpy as np
import pytest

from conftest import random_sparse
from rgdbek.lsqr import LsqrOptions, as_operator, lsqr
from rgdbek.sparse import SparseMatrix


def test_identity():
    y, res, _ = lsqr(SparseMatrix.identity(3), np.array([1.0, 2.0, 3.0]))
    np.testing.assert_allclose(y, [1.0, 2.0, 3.0], rtol=1e-14)
    assert res <= 1e-14


def test_column_vector_normal_equations():
    y, _, _ = lsqr(np.array([[1.0], [1.0]]), np.array([1.0, 3.0]))
    np.testing.assert_allclose(y, [2.0], rtol=1e-14)


def test_full_rank_matches_pinv():
    M = np.random.default_rng(0).standard_normal((5, 3))
    rhs = np.random.default_rng(1).standard_normal(5)
    y, _, _ = lsqr(M, rhs, LsqrOptions(rel_tolerance=1e-12))
    np.testing.assert_allclose(y, np.linalg.pinv(M) @ rhs, atol=1e-8)


def test_sparse_and_dense_operators_agree():
    A = random_sparse(30, 12, 0.3, 2)
    rhs = np.random.default_rng(3).standard_normal(30)
    ys, _, _ = lsqr(A, rhs, LsqrOptions(rel_tolerance=1e-12))
    yd, _, _ = lsqr(A.to_dense(), rhs, LsqrOptions(rel_tolerance=1e-12))
    np.testing.assert_allclose(ys, yd, atol=1e-10)


def test_zero_rhs_short_circuits():
    y, res, it = lsqr(np.eye(3), np.zeros(3))
    assert it == 0 and res == 0.0 and not y.any()


def test_rhs_orthogonal_to_range():
    y, res, it = lsqr(np.array([[1.0], [0.0]]), np.array([0.0, 2.0]))
    assert it == 0 and y[0] == 0.0 and res == 2.0


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        lsqr(np.eye(3), np.ones(2))


def test_iteration_cap_respected():
    M = np.random.default_rng(4).standard_normal((40, 40))
    _, _, it = lsqr(M, np.ones(40), LsqrOptions(rel_tolerance=1e-14, max_inner_iters=3))
    assert it == 3


def test_option_validation():
    with pytest.raises(ValueError):
        LsqrOptions(rel_tolerance=0)
    with pytest.raises(ValueError):
        LsqrOptions(max_inner_iters=0)


def test_operator_shape():
    assert as_operator(random_sparse(4, 7, 0.5, 0)).shape == (4, 7)
