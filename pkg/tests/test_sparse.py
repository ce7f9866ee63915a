import numpy as np
import pytest

from conftest import random_sparse
from rgdbek.sparse import SparseMatrix, extract_columns, extract_rows, rse, spmv, spmv_transpose


def _triple_loop(dense, x):
    m, n = dense.shape
    y = np.zeros(m)
    for i in range(m):
        for j in range(n):
            y[i] += dense[i, j] * x[j]
    return y


def test_identity_products():
    eye = SparseMatrix.identity(2)
    np.testing.assert_array_equal(spmv(eye, np.array([3.0, -1.0])), [3.0, -1.0])
    np.testing.assert_array_equal(spmv_transpose(eye, np.array([1.0, 2.0])), [1.0, 2.0])


def test_empty_matrix_annihilates():
    Z = SparseMatrix.from_dense(np.zeros((3, 4)))
    assert Z.nnz == 0
    np.testing.assert_array_equal(spmv(Z, np.arange(4.0)), np.zeros(3))


def test_transpose_hand_case():
    A = SparseMatrix.from_dense([[1.0, 0.0], [0.0, 2.0]])
    np.testing.assert_array_equal(spmv_transpose(A, np.ones(2)), [1.0, 2.0])


@pytest.mark.parametrize("shape,seed", [((6, 4), 0), ((5, 7), 1)])
def test_products_match_dense_loops(shape, seed):
    A = random_sparse(*shape, 0.5, seed)
    D = A.to_dense()
    rng = np.random.default_rng(seed)
    x, z = rng.standard_normal(shape[1]), rng.standard_normal(shape[0])
    np.testing.assert_allclose(spmv(A, x), _triple_loop(D, x), rtol=0, atol=1e-12)
    np.testing.assert_allclose(spmv_transpose(A, z), _triple_loop(D.T, z), rtol=0, atol=1e-12)


def test_dimension_errors_name_lengths():
    A = random_sparse(3, 4, 0.5, 0)
    with pytest.raises(ValueError, match="4"):
        spmv(A, np.ones(3))
    with pytest.raises(ValueError, match="3"):
        spmv_transpose(A, np.ones(4))


def test_extract_rows_cases():
    A = random_sparse(4, 3, 0.7, 2)
    D = A.to_dense()
    assert extract_rows(A, range(4)) == A
    np.testing.assert_array_equal(extract_rows(A, [1]).to_dense(), D[[1]])
    sub = extract_rows(A, [2, 0])
    np.testing.assert_array_equal(sub.to_dense(), D[[2, 0]])
    np.testing.assert_allclose(sub.row_sq_norms, (D[[2, 0]] ** 2).sum(1))
    with pytest.raises(IndexError):
        extract_rows(A, [4])
    with pytest.raises(ValueError):
        extract_rows(A, [1, 1])


def test_extract_columns_cases():
    A = random_sparse(3, 5, 0.7, 3)
    D = A.to_dense()
    assert extract_columns(A, range(5)) == A
    assert extract_columns(A, [3]).shape == (3, 1)
    np.testing.assert_array_equal(extract_columns(A, [4, 1, 2]).to_dense(), D[:, [4, 1, 2]])
    with pytest.raises(IndexError):
        extract_columns(A, [-1])


def test_rse_cases():
    eye = SparseMatrix.identity(2)
    assert rse(eye, np.zeros(2), np.ones(2)) == 1.0
    assert rse(eye, np.array([1.0, 2.0]), np.array([1.0, 2.0])) == 0.0
    A = random_sparse(5, 3, 0.8, 4)
    rng = np.random.default_rng(4)
    x, b = rng.standard_normal(3), rng.standard_normal(5)
    D = A.to_dense()
    direct = np.sum((D @ x - b) ** 2) / np.sum(b ** 2)
    assert abs(rse(A, x, b) - direct) <= 1e-14
    with pytest.raises(ValueError):
        rse(A, x, np.zeros(5))


def test_norm_caches_are_read_only():
    A = random_sparse(4, 4, 0.5, 5)
    with pytest.raises(ValueError):
        A.row_sq_norms[0] = 1.0
