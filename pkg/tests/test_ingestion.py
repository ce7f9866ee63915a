import numpy as np
import pytest

from rgdbek.ingestion import (MatrixMarketError, RhsSpec, build_rhs, gen_sparse_random,
                              read_matrix_market, write_matrix_market)
from rgdbek.sparse import SparseMatrix, spmv_transpose


def _write(tmp_path, text, name="m.mtx"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_identity_file(tmp_path):
    A = read_matrix_market(_write(tmp_path, "%%MatrixMarket matrix coordinate real general\n% c\n2 2 2\n1 1 1.0\n2 2 1.0\n"))
    assert A.nnz == 2 and A == SparseMatrix.identity(2)


def test_symmetric_mirror(tmp_path):
    A = read_matrix_market(_write(tmp_path, "%%MatrixMarket matrix coordinate real symmetric\n2 2 3\n1 1 2\n2 1 1\n2 2 3\n"))
    assert A.nnz == 4
    np.testing.assert_array_equal(A.to_dense(), [[2.0, 1.0], [1.0, 3.0]])


def test_array_format(tmp_path):
    A = read_matrix_market(_write(tmp_path, "%%MatrixMarket matrix array real general\n2 2\n1\n3\n2\n4\n"))
    np.testing.assert_array_equal(A.to_dense(), [[1.0, 2.0], [3.0, 4.0]])


def test_out_of_range_names_line(tmp_path):
    p = _write(tmp_path, "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 5 1.0\n")
    with pytest.raises(MatrixMarketError, match="line 3"):
        read_matrix_market(p)


@pytest.mark.parametrize("text", [
    "%%MatrixMarket matrix coordinate complex general\n1 1 1\n1 1 1 0\n",
    "%%MatrixMarket matrix coordinate pattern general\n1 1 1\n1 1\n",
    "not a header\n",
    "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n",
])
def test_rejected_files(tmp_path, text):
    with pytest.raises(MatrixMarketError):
        read_matrix_market(_write(tmp_path, text))


def test_round_trip_exact(tmp_path):
    A = gen_sparse_random(20, 15, 0.2, seed=1)
    write_matrix_market(A, tmp_path / "a.mtx")
    assert read_matrix_market(tmp_path / "a.mtx") == A


def test_generator_counts_and_moments():
    assert gen_sparse_random(5, 6, 1.0, 0).nnz == 30
    assert gen_sparse_random(100, 100, 0.01, 7).nnz == 100
    big = gen_sparse_random(1000, 100, 1.0, 3)
    assert abs(big.values.mean()) <= 0.02
    with pytest.raises(ValueError):
        gen_sparse_random(3, 3, 0.0)


def test_consistent_rhs():
    b, x = build_rhs(SparseMatrix.identity(2), [1.0, 2.0])
    np.testing.assert_array_equal(b, [1.0, 2.0])


def test_inconsistent_rhs_orthogonal_to_range():
    A = gen_sparse_random(60, 20, 0.2, seed=2)
    x = np.random.default_rng(0).standard_normal(20)
    b, _ = build_rhs(A, x, RhsSpec("inconsistent"))
    from rgdbek.sparse import spmv
    r = b - spmv(A, x)
    assert np.linalg.norm(spmv_transpose(A, r)) / np.linalg.norm(r) <= 1e-8
    assert abs(np.linalg.norm(r) - 0.1 * np.linalg.norm(spmv(A, x))) <= 1e-12 * np.linalg.norm(b)


def test_inconsistent_rhs_errors():
    with pytest.raises(ValueError):
        build_rhs(SparseMatrix.identity(3), np.zeros(3), RhsSpec("inconsistent"))
    with pytest.raises(ValueError):
        build_rhs(SparseMatrix.identity(3), np.ones(3), RhsSpec("inconsistent"))  # full range
    with pytest.raises(ValueError):
        RhsSpec("other")
