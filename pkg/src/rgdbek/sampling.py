"""Residual scores, sampling distributions and block samplers.

Blocks are drawn without replacement with exponential keys: each index gets
``-log(u) / p`` and the ``k`` smallest keys win. One uniform is consumed per
index on every call, so the random stream advances identically regardless of
the probabilities.
"""
from __future__ import annotations

import numpy as np

from .sparse import SparseMatrix, spmv, spmv_transpose


class NoSampleableMass(ArithmeticError):
    """All scores are zero: nothing left to sample (the residual is annihilated)."""


def make_rng(seed, *key) -> np.random.Generator:
    """Independent generator for stream ``key`` under root ``seed``.

    Streams are addressed by spawn keys of a :class:`numpy.random.SeedSequence`
    so that ``make_rng(s, 1, p)`` is the same stream wherever it is created.
    """
    ss = np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


def scores_from_products(products, sq_norms) -> np.ndarray:
    """``products**2 / sq_norms`` with zero-norm entries pinned to 0."""
    products = np.asarray(products, dtype=np.float64)
    out = np.zeros_like(products)
    live = sq_norms > 0
    out[live] = products[live] ** 2 / sq_norms[live]
    return out


def column_scores(A: SparseMatrix, z) -> np.ndarray:
    """Column residual scores ``(A^T z)_j^2 / ||A_(j)||^2``."""
    return scores_from_products(spmv_transpose(A, z), A.col_sq_norms)


def row_residual(A: SparseMatrix, b, z, x) -> np.ndarray:
    """``b - z - A x``."""
    return np.asarray(b, dtype=np.float64) - np.asarray(z, dtype=np.float64) - spmv(A, x)


def row_scores(A: SparseMatrix, b, z, x) -> np.ndarray:
    """Row residual scores ``(b_i - z_i - (Ax)_i)^2 / ||A^(i)||^2``."""
    return scores_from_products(row_residual(A, b, z, x), A.row_sq_norms)


def to_distribution(scores) -> np.ndarray:
    """Normalize non-negative scores to probabilities.

    Raises
    ------
    NoSampleableMass
        If every score is zero.
    """
    scores = np.asarray(scores, dtype=np.float64)
    total = scores.sum()
    if not total > 0.0:
        raise NoSampleableMass("all scores are zero")
    return scores / total


def block_size(eta: float, dim: int) -> int:
    """``max(1, round(eta * dim))``."""
    return max(1, int(round(eta * dim)))


def sample_block(p, k: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``k`` distinct indices, weighted by ``p``, without replacement.

    ``k`` is clamped to the number of indices with positive probability.
    The block is returned in ascending index order.
    """
    p = np.asarray(p, dtype=np.float64)
    u = rng.random(p.shape[0])
    live = p > 0
    k = min(int(k), int(live.sum()))
    if k < 1:
        raise ValueError("block size must be at least 1")
    keys = np.full(p.shape[0], np.inf)
    with np.errstate(divide="ignore", over="ignore"):
        keys[live] = -np.log(u[live]) / p[live]
    if k == live.sum():
        chosen = np.flatnonzero(live)
    else:
        chosen = np.argpartition(keys, k - 1)[:k]
    return np.sort(chosen)


def greedy_block(scores, eta: float) -> np.ndarray:
    """Threshold set ``{j : s_j >= eta * max(s)}``."""
    scores = np.asarray(scores, dtype=np.float64)
    top = scores.max(initial=0.0)
    if not top > 0.0:
        raise NoSampleableMass("all scores are zero")
    return np.flatnonzero(scores >= eta * top)
