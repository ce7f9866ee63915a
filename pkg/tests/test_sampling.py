import numpy as np
import pytest

from conftest import random_sparse
from rgdbek.sampling import (NoSampleableMass, block_size, column_scores, greedy_block, make_rng,
                             row_scores, sample_block, to_distribution)
from rgdbek.sparse import SparseMatrix, spmv


def test_column_scores_hand_cases():
    np.testing.assert_array_equal(column_scores(SparseMatrix.identity(2), np.ones(2)), [1.0, 1.0])
    A = SparseMatrix.from_dense([[1.0, 0.0], [0.0, 2.0]])
    np.testing.assert_allclose(column_scores(A, np.ones(2)), [1.0, 1.0], rtol=1e-15)
    np.testing.assert_array_equal(column_scores(A, np.zeros(2)), [0.0, 0.0])


def test_row_scores_hand_cases():
    eye = SparseMatrix.identity(2)
    np.testing.assert_array_equal(row_scores(eye, np.array([2.0, 0.0]), np.zeros(2), np.zeros(2)), [4.0, 0.0])
    A = random_sparse(5, 3, 0.8, 0)
    x = np.random.default_rng(0).standard_normal(3)
    z = np.random.default_rng(1).standard_normal(5)
    b = spmv(A, x) + z
    np.testing.assert_allclose(row_scores(A, b, z, x), 0.0, atol=1e-28)


def test_empty_row_scores_zero():
    A = SparseMatrix.from_dense([[1.0, 0.0], [0.0, 0.0]])
    s = row_scores(A, np.array([1.0, 5.0]), np.zeros(2), np.zeros(2))
    assert s[1] == 0.0


def test_distribution_cases():
    np.testing.assert_array_equal(to_distribution([1, 1]), [0.5, 0.5])
    np.testing.assert_array_equal(to_distribution([3, 1]), [0.75, 0.25])
    with pytest.raises(NoSampleableMass):
        to_distribution([0.0, 0.0])


def test_point_mass_and_exhaustive():
    assert sample_block(np.array([1.0, 0, 0]), 1, make_rng(0)).tolist() == [0]
    assert sample_block(np.array([1.0, 0, 0]), 3, make_rng(0)).tolist() == [0]  # clamped
    p = np.full(6, 1 / 6)
    assert sample_block(p, 6, make_rng(1)).tolist() == list(range(6))


def test_block_size_below_one_after_clamp():
    with pytest.raises(ValueError):
        sample_block(np.array([0.5, 0.5]), 0, make_rng(0))


def test_single_draw_frequency():
    rng = make_rng(2024)
    p = np.array([0.75, 0.25])
    hits = sum(sample_block(p, 1, rng)[0] == 0 for _ in range(100_000))
    assert abs(hits / 100_000 - 0.75) <= 0.01


def test_inclusion_probabilities_match_enumeration():
    # successive sampling without replacement: exact first-order inclusion
    # probabilities by enumerating ordered draws
    p = np.array([0.5, 0.3, 0.15, 0.05])
    k = 2
    incl = np.zeros(4)
    for i in range(4):
        for j in range(4):
            if i != j:
                pr = p[i] * p[j] / (1 - p[i])
                incl[i] += pr
                incl[j] += pr
    rng = make_rng(7)
    counts = np.zeros(4)
    N = 40_000
    for _ in range(N):
        counts[sample_block(p, k, rng)] += 1
    np.testing.assert_allclose(counts / N, incl, atol=0.01)


def test_streams_are_independent_and_reproducible():
    a = make_rng(5, 1, 0).random(4)
    assert np.array_equal(a, make_rng(5, 1, 0).random(4))
    assert not np.array_equal(a, make_rng(5, 1, 1).random(4))
    assert not np.array_equal(a, make_rng(5, 0).random(4))


def test_block_size_rounding():
    assert block_size(0.5, 20) == 10
    assert block_size(0.1, 3) == 1   # never empty
    assert block_size(0.99, 7) == 7


def test_greedy_threshold_set():
    assert greedy_block(np.array([1.0, 4.0, 2.0, 3.9]), 0.5).tolist() == [1, 2, 3]
