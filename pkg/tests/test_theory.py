import numpy as np
import pytest

from conftest import random_sparse
from rgdbek.ingestion import random_system
from rgdbek.theory import (GAMMA_GRID, block_projection_expectation, block_sampling_bound,
                           gamma_col, geometric_inequality, mu_block, mu_col, one_step_ratios,
                           row_blocks, sigma_min)


def _lemma_instance(seed):
    rng = np.random.default_rng(seed)
    return rng.standard_normal((4, 3)), rng.standard_normal(3)


def test_row_blocks_enumeration():
    assert len(row_blocks(4, 2)) == 6
    assert row_blocks(3, 3) == [(0, 1, 2)]


def test_mu_block_orthogonal_rows():
    # orthonormal rows: ||U_B^T U_B||_2 = 1 and ||U_B||_F^2 = s
    assert mu_block(np.eye(3), 2) == pytest.approx(0.5, abs=1e-15)
    # parallel rows saturate the ratio
    assert mu_block(np.ones((3, 2)), 2) == pytest.approx(1.0, abs=1e-15)


def test_spectral_ratio_is_trivially_one():
    U, _ = _lemma_instance(0)
    assert mu_block(U, 2, norm="spectral") == pytest.approx(1.0, abs=1e-12)


def test_projection_expectation_by_hand():
    # U = I_2, s = 1: P(B={j}) ∝ v_j^2 and ||P_{j} v||^2 = v_j^2
    v = np.array([3.0, 4.0])
    expect = (9 * 9 + 16 * 16) / 25
    assert block_projection_expectation(np.eye(2), v, 1) == pytest.approx(expect, rel=1e-15)


@pytest.mark.parametrize("seed", range(5))
def test_sampling_bound_holds(seed):
    U, v = _lemma_instance(seed)
    assert block_projection_expectation(U, v, 2) >= block_sampling_bound(U, v, 2) - 1e-12


def test_spectral_reading_fails_somewhere():
    # frozen from a scan of random instances; documents why Frobenius norms are used
    fails = sum(block_projection_expectation(*_lemma_instance(s), 2)
                < block_sampling_bound(*_lemma_instance(s), 2, norm="spectral") - 1e-12 for s in range(100))
    assert fails > 0


def test_geometric_inequality_grid():
    assert GAMMA_GRID[0] == 0.01 and GAMMA_GRID[-1] == 0.99 and len(GAMMA_GRID) == 21
    for g in GAMMA_GRID:
        for k in range(201):
            lhs, rhs = geometric_inequality(g, k)
            assert lhs <= rhs


def test_sigma_min_and_errors():
    assert sigma_min(np.diag([3.0, 0.5, 0.0])) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        sigma_min(np.zeros((2, 2)))
    with pytest.raises(ValueError):
        mu_col(np.eye(3), 4)
    with pytest.raises(ValueError):
        mu_col(np.eye(3), 2, norm="nuclear")


def test_mu_col_matches_direct_enumeration():
    M = random_sparse(8, 5, 0.8, 1).to_dense()
    from itertools import combinations
    best = 0.0
    for c in combinations(range(5), 3):
        X = M[:, list(c)]
        best = max(best, np.linalg.norm(X.T @ X, 2) / np.sum(X * X))
    assert mu_col(M, 3) == pytest.approx(best, rel=1e-12)


def test_gamma_col_small_system_and_one_step_contraction():
    A, b, _ = random_system(30, 8, 0.6, seed=2)
    g = gamma_col(A, 0.5)
    assert 0.0 < g < 1.0
    r = one_step_ratios(A, b, 0.5, range(50))
    assert np.all((r >= 0) & (r <= 1 + 1e-12))
    assert r.mean() <= g


def test_gamma_col_refuses_huge_enumerations():
    with pytest.raises(ValueError):
        gamma_col(np.random.default_rng(0).standard_normal((60, 40)), 0.5)
