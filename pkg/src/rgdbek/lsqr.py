"""LSQR (Golub-Kahan bidiagonalization) for the inner least-squares solves."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sps

from .sparse import SparseMatrix

try:  # direct CSR kernel: the inner loop is dominated by per-call overhead
    from scipy.sparse._sparsetools import csr_matvec as _csr_matvec
except ImportError:  # pragma: no cover
    _csr_matvec = None


@dataclass(frozen=True)
class LsqrOptions:
    """Inner-solve controls.

    ``max_inner_iters=None`` means ``2 * max(n_rows, n_cols)`` of the operator.
    """

    rel_tolerance: float = 1e-8
    max_inner_iters: Optional[int] = None

    def __post_init__(self):
        if not self.rel_tolerance > 0:
            raise ValueError("rel_tolerance must be positive")
        if self.max_inner_iters is not None and self.max_inner_iters < 1:
            raise ValueError("max_inner_iters must be >= 1")


@dataclass(frozen=True)
class LinearOperator:
    n_rows: int
    n_cols: int
    apply: Callable[[np.ndarray], np.ndarray]
    apply_transpose: Callable[[np.ndarray], np.ndarray]

    @property
    def shape(self):
        return (self.n_rows, self.n_cols)


def as_operator(A) -> LinearOperator:
    """Wrap a :class:`SparseMatrix`, dense array or scipy matrix."""
    if isinstance(A, LinearOperator):
        return A
    if isinstance(A, SparseMatrix):
        mat = A.to_scipy()
    else:
        mat = A if hasattr(A, "shape") and hasattr(A, "T") else np.asarray(A, dtype=np.float64)
    if sps.issparse(mat) and _csr_matvec is not None:
        return LinearOperator(mat.shape[0], mat.shape[1],
                              _kernel(sps.csr_matrix(mat)), _kernel(sps.csr_matrix(mat.T)))
    mt = mat.T
    return LinearOperator(mat.shape[0], mat.shape[1],
                          lambda x: mat @ x, lambda y: mt @ y)


def _kernel(csr):
    m, n = csr.shape
    ptr, ind = csr.indptr, csr.indices
    data = csr.data.astype(np.float64, copy=False)

    def apply(x):
        y = np.zeros(m)
        _csr_matvec(m, n, ptr, ind, data, np.ascontiguousarray(x, dtype=np.float64), y)
        return y
    return apply


def _norm(v):
    return float(np.sqrt(v @ v))


def lsqr(op, rhs, opts: LsqrOptions = LsqrOptions()):
    """Minimize ``||op y - rhs||_2`` starting from ``y = 0``.

    Stops once the estimated ``||op^T (op y - rhs)||`` drops to
    ``opts.rel_tolerance * ||op^T rhs||`` or the iteration cap is hit.

    Returns
    -------
    solution : ndarray
    residual_norm : float
        Estimate of ``||op y - rhs||`` carried by the recurrence.
    iters : int
    """
    op = as_operator(op)
    b = np.asarray(rhs, dtype=np.float64)
    if b.ndim != 1 or b.shape[0] != op.n_rows:
        raise ValueError(f"lsqr: rhs must have length {op.n_rows}, got shape {b.shape}")
    limit = opts.max_inner_iters or 2 * max(op.n_rows, op.n_cols)

    x = np.zeros(op.n_cols)
    beta = _norm(b)
    if beta == 0.0:
        return x, 0.0, 0
    u = b / beta
    v = op.apply_transpose(u)
    alfa = _norm(v)
    if alfa == 0.0:
        # rhs orthogonal to range(op): zero is already optimal
        return x, float(beta), 0
    v = v / alfa
    w = v.copy()
    phibar, rhobar = beta, alfa
    target = opts.rel_tolerance * alfa * beta

    itn = 0
    while itn < limit:
        itn += 1
        u = op.apply(v) - alfa * u
        beta = _norm(u)
        if beta > 0:
            u /= beta
        v = op.apply_transpose(u) - beta * v
        alfa = _norm(v)
        if alfa > 0:
            v /= alfa

        rho = np.hypot(rhobar, beta)
        c, s = rhobar / rho, beta / rho
        theta = s * alfa
        rhobar = -c * alfa
        phi = c * phibar
        phibar = s * phibar

        x += (phi / rho) * w
        w = v - (theta / rho) * w

        if phibar * alfa * abs(c) <= target or alfa == 0.0 or beta == 0.0:
            break
    return x, float(phibar), itn
