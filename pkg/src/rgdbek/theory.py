"""Small-scale diagnostics for the convergence theory.

Everything here enumerates blocks exhaustively and is only meant for tiny
matrices (tests, sanity checks). Norms in the block-coherence ratios are
Frobenius by default: with spectral norms the ratio
``||X^T X||_2 / ||X||_2^2`` is identically 1 and the sampling bound is
false on a sizeable fraction of random instances.
"""
from __future__ import annotations

from itertools import combinations
from math import comb

import numpy as np

from .lsqr import LsqrOptions
from .solvers import SolveConfig, rgdbek
from .sparse import SparseMatrix

_CHUNK = 8192


def _sq_norm(X, norm):
    if norm == "fro":
        return float(np.sum(X * X))
    if norm == "spectral":
        return float(np.linalg.norm(X, 2) ** 2)
    raise ValueError(f"norm must be 'fro' or 'spectral', got {norm!r}")


def row_blocks(d: int, s: int):
    return list(combinations(range(d), s))


def mu_block(U, s: int, norm: str = "fro") -> float:
    """``max_B ||U_B^T U_B||_2 / ||U_B||^2`` over all row blocks of size ``s``."""
    U = np.asarray(U, dtype=np.float64)
    best = 0.0
    for B in row_blocks(U.shape[0], s):
        UB = U[list(B)]
        den = _sq_norm(UB, norm)
        if den > 0:
            best = max(best, np.linalg.norm(UB.T @ UB, 2) / den)
    return best


def block_projection_expectation(U, v, s: int) -> float:
    """Exact ``E ||P_B v||^2`` with ``P(B)`` proportional to ``sum_{j in B} w_j^2``.

    ``P_B`` projects onto the span of the rows of ``U_B`` and
    ``w_j = |<u_j, v>| / ||u_j||``.
    """
    U = np.asarray(U, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    rn = np.linalg.norm(U, axis=1)
    w2 = np.zeros(U.shape[0])
    live = rn > 0
    w2[live] = (U[live] @ v) ** 2 / rn[live] ** 2
    blocks = row_blocks(U.shape[0], s)
    weights = np.array([w2[list(B)].sum() for B in blocks])
    total = weights.sum()
    if total == 0:
        return 0.0
    acc = 0.0
    for B, wt in zip(blocks, weights):
        if wt == 0:
            continue
        UB = U[list(B)]
        # projection of v onto row space of U_B
        coef = np.linalg.lstsq(UB.T, v, rcond=None)[0]
        pv = UB.T @ coef
        acc += wt * float(pv @ pv)
    return acc / total


def block_sampling_bound(U, v, s: int, norm: str = "fro") -> float:
    """Right-hand side ``mu_block^{-1} ||U v||^2 / ||U||^2`` of the sampling lemma."""
    U = np.asarray(U, dtype=np.float64)
    mu = mu_block(U, s, norm)
    if mu == 0:
        return 0.0
    uv = U @ np.asarray(v, dtype=np.float64)
    return float(uv @ uv) / (mu * _sq_norm(U, norm))


def geometric_inequality(gamma: float, k: int) -> tuple:
    """Both sides of ``k gamma^k <= 2 gamma^(k/2) / (1 - sqrt(gamma))``."""
    lhs = k * gamma ** k
    rhs = 2 * gamma ** (k / 2) / (1 - np.sqrt(gamma))
    return lhs, rhs


GAMMA_GRID = (0.01,) + tuple(round(0.05 * i, 2) for i in range(1, 20)) + (0.99,)


def sigma_min(A, rtol: float = 1e-12) -> float:
    """Smallest nonzero singular value of a dense or sparse matrix."""
    M = A.to_dense() if isinstance(A, SparseMatrix) else np.asarray(A, dtype=np.float64)
    sv = np.linalg.svd(M, compute_uv=False)
    nz = sv[sv > rtol * sv[0]] if sv.size and sv[0] > 0 else sv[:0]
    if nz.size == 0:
        raise ValueError("matrix has no nonzero singular value")
    return float(nz[-1])


def mu_col(A, s: int, norm: str = "fro") -> float:
    """``max_U ||A_U^T A_U||_2 / ||A_U||^2`` over all column blocks of size ``s``.

    Works on the Gram matrix so each block costs one ``s x s`` eigensolve;
    blocks are processed in batches.
    """
    M = A.to_dense() if isinstance(A, SparseMatrix) else np.asarray(A, dtype=np.float64)
    n = M.shape[1]
    if not 1 <= s <= n:
        raise ValueError(f"block size must lie in [1, {n}], got {s}")
    if norm not in ("fro", "spectral"):
        raise ValueError(f"norm must be 'fro' or 'spectral', got {norm!r}")
    G = M.T @ M
    best = 0.0
    it = combinations(range(n), s)
    while True:
        chunk = np.array([c for _, c in zip(range(_CHUNK), it)], dtype=np.int64)
        if chunk.size == 0:
            break
        sub = G[chunk[:, :, None], chunk[:, None, :]]
        top = np.linalg.eigvalsh(sub)[:, -1]
        den = np.trace(sub, axis1=1, axis2=2) if norm == "fro" else top
        ok = den > 0
        if ok.any():
            best = max(best, float(np.max(top[ok] / den[ok])))
    return best


def gamma_col(A, eta: float, norm: str = "fro") -> float:
    """``1 - mu_col^{-1} sigma_min^2(A) / ||A||^2`` with blocks of ``ceil(eta n)`` columns."""
    M = A.to_dense() if isinstance(A, SparseMatrix) else np.asarray(A, dtype=np.float64)
    s = int(np.ceil(eta * M.shape[1]))
    if comb(M.shape[1], s) > 5_000_000:
        raise ValueError("too many column blocks to enumerate")
    mu = mu_col(M, s, norm)
    return 1.0 - sigma_min(M) ** 2 / (mu * _sq_norm(M, norm))


def one_step_ratios(A: SparseMatrix, b, eta: float, seeds) -> np.ndarray:
    """``||z_1||^2 / ||z_0||^2`` of one RGDBEK column step per seed (consistent ``b``)."""
    b = np.asarray(b, dtype=np.float64)
    z0 = float(b @ b)
    out = []
    for s in seeds:
        cfg = SolveConfig(eta=eta, tolerance=1e-300, max_iters=1, seed=int(s),
                          lsqr_opts=LsqrOptions(rel_tolerance=1e-12))
        z1 = rgdbek(A, b, cfg).z
        out.append(float(z1 @ z1) / z0)
    return np.array(out)
