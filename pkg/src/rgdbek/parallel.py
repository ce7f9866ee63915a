"""Row-partitioned parallel RGDBEK on in-process workers.

Each of ``P`` worker threads owns a contiguous block of rows and its slice of
``z``; workers meet only at collective calls:

* setup: broadcast of ``b`` and the global column norms (iteration 0),
* ``reduce1``: all-reduce of the local ``(A^(p))^T z^(p)`` products,
* ``reduce2``: all-reduce of the local ``x`` corrections (lazy average),
* ``bcast``: root's terminate flag at the end of every iteration.

Reductions sum contributions in rank order, so every run is reproducible and
every rank sees bit-identical reduced vectors.
"""
from __future__ import annotations

import hashlib
import threading
import time
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .sampling import block_size, make_rng, sample_block, scores_from_products, to_distribution
from .solvers import (COLUMN_STREAM, CONVERGED, ITERATION_CAP, ROW_STREAM, STALLED,
                      SolveConfig, SolveResult, SolveTrace, _check_system,
                      project_out_columns, row_correction)
from .sparse import SparseMatrix, extract_columns, extract_rows, rse, spmv, spmv_transpose

_EMPTY = np.zeros(0, dtype=np.int64)


@dataclass(frozen=True)
class WorkerPartition:
    row_ranges: Tuple[Tuple[int, int], ...]

    @property
    def ranks(self) -> int:
        return len(self.row_ranges)

    def rank_nnz(self, A: SparseMatrix) -> np.ndarray:
        ro = A.row_offsets
        return np.array([ro[e] - ro[s] for s, e in self.row_ranges])


def partition_rows_by_nnz(A: SparseMatrix, P: int) -> WorkerPartition:
    """Greedy prefix split of the rows into ``P`` contiguous, nnz-balanced ranges.

    Rank ``p`` grows its range until its nnz reaches
    ``remaining_nnz / remaining_ranks``, always leaving one row for each
    later rank.
    """
    m = A.n_rows
    if not 1 <= P <= m:
        raise ValueError(f"need 1 <= P <= n_rows ({m}), got P={P}")
    counts = A.row_nnz()
    ranges = []
    start, remaining = 0, int(counts.sum())
    for p in range(P):
        left = P - p
        if left == 1:
            end = m
        else:
            target = remaining / left
            end, acc = start, 0
            last = m - (left - 1)  # exclusive bound leaving a row per later rank
            while end < last and (end == start or acc < target):
                acc += counts[end]
                end += 1
        ranges.append((start, end))
        remaining -= int(counts[start:end].sum())
        start = end
    return WorkerPartition(tuple(ranges))


def _rank_ordered_sum(contributions):
    total = np.array(contributions[0], dtype=np.float64, copy=True)
    for c in contributions[1:]:
        total += c
    return total


def all_reduce_sum(contributions) -> List[np.ndarray]:
    """Elementwise sum of per-rank vectors, delivered (as copies) to every rank."""
    contributions = [np.asarray(c, dtype=np.float64) for c in contributions]
    lengths = {c.shape for c in contributions}
    if len(lengths) != 1:
        raise ValueError(f"all_reduce_sum: contribution shapes differ: {sorted(lengths)}")
    total = _rank_ordered_sum(contributions)
    return [total.copy() for _ in contributions]


class EventLog:
    """Collective-call records ``(iteration, rank, event)``."""

    def __init__(self):
        self._lock = threading.Lock()
        self._events = []

    def add(self, it, rank, event):
        with self._lock:
            self._events.append((int(it), int(rank), event, len(self._events)))

    @property
    def events(self):
        return [e[:3] for e in sorted(self._events, key=lambda e: (e[0], e[1], e[3]))]

    def count(self, it, rank, event):
        return sum(1 for e in self.events if e == (it, rank, event))

    def lines(self):
        return [f"{it},{rank},{ev}" for it, rank, ev in self.events]

    def write(self, path):
        with open(path, "w") as fh:
            fh.write("iter,rank,event\n")
            for ln in self.lines():
                fh.write(ln + "\n")


class Communicator:
    """Barrier-plus-combine collectives shared by ``size`` threads."""

    def __init__(self, size, log: Optional[EventLog] = None):
        self.size = size
        self.log = log
        self._barrier = threading.Barrier(size)
        self._slots = [None] * size

    def abort(self):
        self._barrier.abort()

    def all_reduce_sum(self, rank, vec, it, event):
        self._slots[rank] = vec
        self._barrier.wait()
        out = _rank_ordered_sum(self._slots)
        self._barrier.wait()
        if self.log is not None:
            self.log.add(it, rank, event)
        return out

    def bcast(self, rank, value, it, root=0):
        if rank == root:
            self._slots[root] = value
        self._barrier.wait()
        out = self._slots[root]
        self._barrier.wait()
        if self.log is not None:
            self.log.add(it, rank, "bcast")
        return out


@dataclass
class ParallelResult(SolveResult):
    partition: Optional[WorkerPartition] = None
    events: Optional[EventLog] = None
    # per rank, per iteration: digest of (U_k, reduced A^T z, x_{k+1})
    rank_digests: List[List[str]] = field(default_factory=list)


def _digest(*arrays):
    h = hashlib.sha1()
    for a in arrays:
        h.update(np.ascontiguousarray(a).tobytes())
    return h.hexdigest()


def parallel_rgdbek(A: SparseMatrix, b, cfg: SolveConfig = SolveConfig(), P: int = 1,
                    record_digests: bool = False) -> ParallelResult:
    """Parallel RGDBEK with ``P`` row-partitioned workers.

    Column blocks are sampled from the globally reduced scores with a shared
    stream, so all ranks pick the same block without extra communication.
    Row blocks of ``round(eta * d_p)`` local rows are drawn independently per
    rank and the corrections are averaged: ``x += sum_p x_p / P``.
    With ``P = 1`` the iterates coincide bit-for-bit with :func:`rgdbek`.
    """
    b = _check_system(A, b)
    part = partition_rows_by_nnz(A, P)
    log = EventLog()
    comm = Communicator(P, log)
    n = A.n_cols
    trace = SolveTrace()
    z_parts = [None] * P
    x_out = [None] * P
    digests = [[] for _ in range(P)]
    errors = []

    def worker(p):
        try:
            start, end = part.row_ranges[p]
            A_p = extract_rows(A, np.arange(start, end))
            b_all, colnorms = comm.bcast(p, (b, A.col_sq_norms) if p == 0 else None, 0)
            b_p = b_all[start:end]
            z_p = b_p.copy()
            x = np.zeros(n)
            col_rng = make_rng(cfg.seed, *COLUMN_STREAM)
            row_rng = make_rng(cfg.seed, ROW_STREAM, p)
            kc = block_size(cfg.eta, n)
            kr = block_size(cfg.eta, end - start)
            opts = cfg.lsqr_opts
            t0 = time.perf_counter()
            for k in range(1, cfg.max_iters + 1):
                atz = comm.all_reduce_sum(p, spmv_transpose(A_p, z_p), k, "reduce1")
                cscores = scores_from_products(atz, colnorms)
                if cscores.any():
                    U = sample_block(to_distribution(cscores), kc, col_rng)
                    z_p = project_out_columns(extract_columns(A_p, U), z_p, opts)
                else:
                    U = _EMPTY

                resid = b_p - z_p - spmv(A_p, x)
                rscores = scores_from_products(resid, A_p.row_sq_norms)
                if rscores.any():
                    J = sample_block(to_distribution(rscores), kr, row_rng)
                    upd = row_correction(extract_rows(A_p, J), resid[J], opts)
                else:
                    J, upd = _EMPTY, np.zeros(n)
                # block size and row-mass flag ride along with the correction
                packed = np.concatenate([upd, [J.size, float(J.size > 0)]])
                total = comm.all_reduce_sum(p, packed, k, "reduce2")
                x = x + total[:n] / P
                if record_digests:
                    digests[p].append(_digest(U, atz, x))

                flag = None
                if p == 0:
                    stalled = U.size == 0 and total[n + 1] == 0
                    if k % cfg.trace_every == 0 or stalled or k == cfg.max_iters:
                        err = rse(A, x, b)
                        trace.record(k, err, time.perf_counter() - t0, U.size, int(total[n]))
                        if err <= cfg.tolerance:
                            flag = CONVERGED
                    if flag is None and stalled:
                        flag = STALLED
                flag = comm.bcast(p, flag, k)
                if flag is not None:
                    if p == 0:
                        trace.status = flag
                    break
            z_parts[p] = z_p
            x_out[p] = x
        except threading.BrokenBarrierError:
            pass
        except BaseException as exc:  # surface worker failures in the caller
            errors.append(exc)
            comm.abort()

    threads = [threading.Thread(target=worker, args=(p,), name=f"rgdbek-rank{p}") for p in range(P)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    if errors:
        raise errors[0]
    if trace.status not in (CONVERGED, STALLED):
        trace.status = ITERATION_CAP
    if trace.status == STALLED:
        trace.message = "all column and row scores vanished with rse above tolerance"
    return ParallelResult(x_out[0], np.concatenate(z_parts), trace,
                          partition=part, events=log, rank_digests=digests)
