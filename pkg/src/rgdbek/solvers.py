"""Sequential Kaczmarz-type solvers: RGDBEK, GDBEK, REK and RK.

All solvers start from ``x = 0`` (and ``z = b`` for the extended variants)
and stop when the relative square error ``||Ax - b||^2 / ||b||^2`` reaches
``cfg.tolerance`` or after ``cfg.max_iters`` outer iterations.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, List, NamedTuple, Optional

import numpy as np

from .lsqr import LsqrOptions, lsqr
from .sampling import (block_size, greedy_block, make_rng, sample_block,
                       scores_from_products, to_distribution)
from .sparse import (SparseMatrix, extract_columns, extract_rows, rse, spmv,
                     spmv_transpose)

CONVERGED = "converged"
ITERATION_CAP = "iteration-cap"
STALLED = "stalled"

# spawn keys of the random streams; the parallel engine uses the same layout
COLUMN_STREAM = (0,)
ROW_STREAM = 1


@dataclass(frozen=True)
class SolveConfig:
    eta: float = 0.5
    tolerance: float = 1e-6
    max_iters: int = 400_000
    seed: int = 0
    lsqr_opts: LsqrOptions = field(default_factory=LsqrOptions)
    trace_every: int = 1

    def __post_init__(self):
        if not 0 < self.eta < 1:
            raise ValueError(f"eta must lie in (0, 1), got {self.eta}")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.trace_every < 1:
            raise ValueError("trace_every must be >= 1")


@dataclass
class SolveTrace:
    """Per-iteration convergence record."""

    iters: List[int] = field(default_factory=list)
    rse: List[float] = field(default_factory=list)
    elapsed: List[float] = field(default_factory=list)
    col_block: List[int] = field(default_factory=list)
    row_block: List[int] = field(default_factory=list)
    status: str = ITERATION_CAP
    message: str = ""

    def record(self, k, err, elapsed, ncol, nrow):
        self.iters.append(int(k))
        self.rse.append(float(err))
        self.elapsed.append(float(elapsed))
        self.col_block.append(int(ncol))
        self.row_block.append(int(nrow))

    @property
    def iterations(self) -> int:
        return self.iters[-1] if self.iters else 0

    @property
    def final_rse(self) -> float:
        return self.rse[-1] if self.rse else float("nan")

    def rows(self):
        return list(zip(self.iters, self.rse, self.elapsed, self.col_block, self.row_block))


@dataclass
class SolveResult:
    x: np.ndarray
    z: np.ndarray
    trace: SolveTrace

    @property
    def status(self) -> str:
        return self.trace.status

    @property
    def converged(self) -> bool:
        return self.trace.status == CONVERGED


class IterationInfo(NamedTuple):
    """Snapshot handed to solver callbacks after each outer iteration.

    ``x`` and ``z`` are the post-update iterates; ``col_block``/``row_block``
    are the index blocks used (empty when a stage was skipped).
    """

    k: int
    x: np.ndarray
    z: np.ndarray
    col_block: np.ndarray
    row_block: np.ndarray


def _check_system(A: SparseMatrix, b):
    b = np.asarray(b, dtype=np.float64)
    if b.ndim != 1 or b.shape[0] != A.n_rows:
        raise ValueError(f"b must have length {A.n_rows}, got shape {b.shape}")
    if not np.any(b):
        raise ValueError("b = 0: the relative square error is undefined")
    return b


def project_out_columns(A_cols: SparseMatrix, z, opts: LsqrOptions) -> np.ndarray:
    """``z - A_U A_U^+ z`` with the pseudoinverse applied through LSQR."""
    y, _, _ = lsqr(A_cols, z, opts)
    return z - spmv(A_cols, y)


def row_correction(A_rows: SparseMatrix, resid, opts: LsqrOptions) -> np.ndarray:
    """``(A^J)^+ resid`` through LSQR."""
    d, _, _ = lsqr(A_rows, resid, opts)
    return d


_EMPTY = np.zeros(0, dtype=np.int64)


def _double_block(A, b, cfg, pick_cols, pick_rows, callback):
    b = _check_system(A, b)
    opts = cfg.lsqr_opts
    x = np.zeros(A.n_cols)
    z = b.copy()
    trace = SolveTrace()
    t0 = time.perf_counter()
    for k in range(1, cfg.max_iters + 1):
        cscores = scores_from_products(spmv_transpose(A, z), A.col_sq_norms)
        if cscores.any():
            U = pick_cols(cscores)
            z = project_out_columns(extract_columns(A, U), z, opts)
        else:
            U = _EMPTY

        resid = b - z - spmv(A, x)
        rscores = scores_from_products(resid, A.row_sq_norms)
        if rscores.any():
            J = pick_rows(rscores)
            x = x + row_correction(extract_rows(A, J), resid[J], opts)
        else:
            J = _EMPTY

        if callback is not None:
            callback(IterationInfo(k, x, z, U, J))
        stalled = U.size == 0 and J.size == 0
        if k % cfg.trace_every == 0 or stalled or k == cfg.max_iters:
            err = rse(A, x, b)
            trace.record(k, err, time.perf_counter() - t0, U.size, J.size)
            if err <= cfg.tolerance:
                trace.status = CONVERGED
                break
        if stalled:
            trace.status = STALLED
            trace.message = ("all column and row scores vanished with rse above tolerance; "
                             "b has no reachable component left")
            break
    return SolveResult(x, z, trace)


def rgdbek(A: SparseMatrix, b, cfg: SolveConfig = SolveConfig(),
           callback: Optional[Callable[[IterationInfo], None]] = None) -> SolveResult:
    """Randomized greedy double block extended Kaczmarz.

    Each iteration samples ``round(eta * n)`` columns with probability
    proportional to their residual scores, projects ``z`` off their span,
    then samples ``round(eta * m)`` rows the same way and applies the
    block-pseudoinverse correction to ``x``.
    """
    col_rng = make_rng(cfg.seed, *COLUMN_STREAM)
    row_rng = make_rng(cfg.seed, ROW_STREAM, 0)
    kc = block_size(cfg.eta, A.n_cols)
    kr = block_size(cfg.eta, A.n_rows)
    return _double_block(
        A, b, cfg,
        lambda s: sample_block(to_distribution(s), kc, col_rng),
        lambda s: sample_block(to_distribution(s), kr, row_rng),
        callback,
    )


def gdbek(A: SparseMatrix, b, cfg: SolveConfig = SolveConfig(),
          callback: Optional[Callable[[IterationInfo], None]] = None) -> SolveResult:
    """Greedy double block extended Kaczmarz (deterministic thresholding)."""
    return _double_block(
        A, b, cfg,
        lambda s: greedy_block(s, cfg.eta),
        lambda s: greedy_block(s, cfg.eta),
        callback,
    )


class _IndexStream:
    """Pre-drawn categorical indices, refilled in chunks."""

    def __init__(self, rng, p, chunk=4096):
        self.rng, self.p, self.chunk = rng, p, chunk
        self.buf, self.pos = None, chunk

    def __next__(self):
        if self.pos == self.chunk:
            self.buf = self.rng.choice(self.p.shape[0], size=self.chunk, p=self.p)
            self.pos = 0
        i = self.buf[self.pos]
        self.pos += 1
        return int(i)


def _single_index(A, b, cfg, extended, callback):
    b = _check_system(A, b)
    if A.nnz == 0:
        raise ValueError("A has no stored entries")
    csr = A.to_scipy()
    indptr, indices, data = csr.indptr, csr.indices, csr.data
    rows = _IndexStream(make_rng(cfg.seed, ROW_STREAM, 0), A.row_sq_norms / A.row_sq_norms.sum())
    if extended:
        csc = csr.tocsc()
        cptr, cind, cdat = csc.indptr, csc.indices, csc.data
        cols = _IndexStream(make_rng(cfg.seed, *COLUMN_STREAM), A.col_sq_norms / A.col_sq_norms.sum())

    x = np.zeros(A.n_cols)
    z = b.copy() if extended else np.zeros(A.n_rows)
    trace = SolveTrace()
    t0 = time.perf_counter()
    jblk = np.zeros(1, dtype=np.int64)
    iblk = np.zeros(1, dtype=np.int64)
    for k in range(1, cfg.max_iters + 1):
        if extended:
            j = next(cols)
            lo, hi = cptr[j], cptr[j + 1]
            ri, rv = cind[lo:hi], cdat[lo:hi]
            z[ri] -= (rv @ z[ri]) / A.col_sq_norms[j] * rv
            jblk[0] = j
        i = next(rows)
        lo, hi = indptr[i], indptr[i + 1]
        ci, cv = indices[lo:hi], data[lo:hi]
        x[ci] += (b[i] - z[i] - cv @ x[ci]) / A.row_sq_norms[i] * cv
        iblk[0] = i

        if callback is not None:
            callback(IterationInfo(k, x, z, jblk if extended else _EMPTY, iblk))
        if k % cfg.trace_every == 0 or k == cfg.max_iters:
            err = rse(A, x, b)
            trace.record(k, err, time.perf_counter() - t0, int(extended), 1)
            if err <= cfg.tolerance:
                trace.status = CONVERGED
                break
    return SolveResult(x, z, trace)


def rek(A: SparseMatrix, b, cfg: SolveConfig = SolveConfig(),
        callback: Optional[Callable[[IterationInfo], None]] = None) -> SolveResult:
    """Randomized extended Kaczmarz: one column and one row projection per iteration.

    Columns are drawn with probability ``||A_(j)||^2 / ||A||_F^2`` and rows with
    ``||A^(i)||^2 / ||A||_F^2``.
    """
    return _single_index(A, b, cfg, True, callback)


def rk(A: SparseMatrix, b, cfg: SolveConfig = SolveConfig(),
       callback: Optional[Callable[[IterationInfo], None]] = None) -> SolveResult:
    """Randomized Kaczmarz (consistent systems only)."""
    return _single_index(A, b, cfg, False, callback)


SOLVERS = {"rgdbek": rgdbek, "gdbek": gdbek, "rek": rek, "rk": rk}
