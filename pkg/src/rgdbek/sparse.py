"""Compressed-row sparse matrices with cached row/column norms.

The kernels delegate to :mod:`scipy.sparse` over the same CSR arrays; the
transpose product runs over the CSR layout directly (a scatter), so no CSC
copy is ever stored.
"""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp


class SparseMatrix:
    """Immutable CSR matrix in float64.

    Parameters
    ----------
    n_rows, n_cols : int
        Shape.
    row_offsets : array_like of int, length ``n_rows + 1``
    col_indices : array_like of int, length ``nnz``
        Strictly increasing within each row.
    values : array_like of float, length ``nnz``
    check : bool
        Validate the structural invariants (skipped for internally built
        matrices that are correct by construction).
    """

    __slots__ = ("n_rows", "n_cols", "row_offsets", "col_indices", "values",
                 "row_sq_norms", "col_sq_norms", "_csr")

    def __init__(self, n_rows, n_cols, row_offsets, col_indices, values, check=True):
        self.n_rows = int(n_rows)
        self.n_cols = int(n_cols)
        self.row_offsets = np.ascontiguousarray(row_offsets, dtype=np.int64)
        self.col_indices = np.ascontiguousarray(col_indices, dtype=np.int64)
        self.values = np.ascontiguousarray(values, dtype=np.float64)
        if check:
            self._validate()
        for arr in (self.row_offsets, self.col_indices, self.values):
            arr.flags.writeable = False
        self._csr = sp.csr_matrix((self.values, self.col_indices, self.row_offsets),
                                  shape=(self.n_rows, self.n_cols), copy=False)
        sq = self.values * self.values
        row_ids = np.repeat(np.arange(self.n_rows), np.diff(self.row_offsets))
        self.row_sq_norms = np.bincount(row_ids, weights=sq, minlength=self.n_rows)
        self.col_sq_norms = np.bincount(self.col_indices, weights=sq, minlength=self.n_cols)
        self.row_sq_norms.flags.writeable = False
        self.col_sq_norms.flags.writeable = False

    def _validate(self):
        ro, ci = self.row_offsets, self.col_indices
        if self.n_rows < 0 or self.n_cols < 0:
            raise ValueError("negative dimension")
        if ro.shape != (self.n_rows + 1,):
            raise ValueError(f"row_offsets must have length {self.n_rows + 1}, got {ro.shape[0]}")
        if ro[0] != 0 or np.any(np.diff(ro) < 0):
            raise ValueError("row_offsets must start at 0 and be non-decreasing")
        if ro[-1] != ci.shape[0] or ci.shape != self.values.shape:
            raise ValueError("row_offsets[-1], col_indices and values disagree on nnz")
        if ci.size and (ci.min() < 0 or ci.max() >= self.n_cols):
            raise ValueError("column index out of range")
        if ci.size > 1:
            step = np.diff(ci)
            row_start = np.zeros(ci.size, dtype=bool)
            row_start[ro[1:-1][ro[1:-1] < ci.size]] = True
            if np.any((step <= 0) & ~row_start[1:]):
                raise ValueError("column indices must be strictly increasing within a row")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("non-finite stored value")

    # -- constructors -------------------------------------------------------

    @classmethod
    def from_coo(cls, rows, cols, vals, shape):
        """Build from coordinates; duplicate entries are summed, stored zeros kept."""
        m, n = shape
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        vals = np.asarray(vals, dtype=np.float64)
        if rows.size and (rows.min() < 0 or rows.max() >= m or cols.min() < 0 or cols.max() >= n):
            raise ValueError("coordinate out of range")
        order = np.lexsort((cols, rows))
        rows, cols, vals = rows[order], cols[order], vals[order]
        if rows.size:
            new = np.ones(rows.size, dtype=bool)
            new[1:] = (rows[1:] != rows[:-1]) | (cols[1:] != cols[:-1])
            starts = np.flatnonzero(new)
            vals = np.add.reduceat(vals, starts)
            rows, cols = rows[starts], cols[starts]
        offsets = np.zeros(m + 1, dtype=np.int64)
        np.cumsum(np.bincount(rows, minlength=m), out=offsets[1:])
        return cls(m, n, offsets, cols, vals, check=False)

    @classmethod
    def from_dense(cls, dense):
        dense = np.atleast_2d(np.asarray(dense, dtype=np.float64))
        r, c = np.nonzero(dense)
        return cls.from_coo(r, c, dense[r, c], dense.shape)

    @classmethod
    def from_scipy(cls, mat):
        csr = sp.csr_matrix(mat, dtype=np.float64)
        csr.sum_duplicates()
        csr.sort_indices()
        return cls(csr.shape[0], csr.shape[1], csr.indptr, csr.indices, csr.data, check=False)

    @classmethod
    def identity(cls, n):
        idx = np.arange(n)
        return cls(n, n, np.arange(n + 1), idx, np.ones(n), check=False)

    # -- views ----------------------------------------------------------------

    @property
    def shape(self):
        return (self.n_rows, self.n_cols)

    @property
    def nnz(self):
        return int(self.row_offsets[-1])

    def row_nnz(self):
        return np.diff(self.row_offsets)

    def to_scipy(self):
        """The shared scipy CSR view (do not mutate)."""
        return self._csr

    def to_dense(self):
        return self._csr.toarray()

    def __repr__(self):
        return f"SparseMatrix({self.n_rows}x{self.n_cols}, nnz={self.nnz})"

    def __eq__(self, other):
        if not isinstance(other, SparseMatrix):
            return NotImplemented
        return (self.shape == other.shape
                and np.array_equal(self.row_offsets, other.row_offsets)
                and np.array_equal(self.col_indices, other.col_indices)
                and np.array_equal(self.values, other.values))

    __hash__ = None


def _as_vector(v, expected, what):
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1 or v.shape[0] != expected:
        raise ValueError(f"{what}: expected a vector of length {expected}, got shape {v.shape}")
    return v


def spmv(A: SparseMatrix, x) -> np.ndarray:
    """``A @ x``."""
    x = _as_vector(x, A.n_cols, "spmv")
    return A._csr @ x


def spmv_transpose(A: SparseMatrix, z) -> np.ndarray:
    """``A.T @ z`` as a scatter over the CSR rows."""
    z = _as_vector(z, A.n_rows, "spmv_transpose")
    return A._csr.T @ z


def _check_index_block(idx, bound, axis):
    idx = np.asarray(idx, dtype=np.int64).ravel()
    if idx.size and (idx.min() < 0 or idx.max() >= bound):
        raise IndexError(f"{axis} index out of range [0, {bound})")
    if np.unique(idx).size != idx.size:
        raise ValueError(f"duplicate {axis} index in block")
    return idx


def extract_rows(A: SparseMatrix, idx) -> SparseMatrix:
    """Rows ``idx`` of ``A`` in the given order."""
    idx = _check_index_block(idx, A.n_rows, "row")
    starts = A.row_offsets[idx]
    counts = A.row_offsets[idx + 1] - starts
    offsets = np.zeros(idx.size + 1, dtype=np.int64)
    np.cumsum(counts, out=offsets[1:])
    # gather positions row by row without a Python loop
    pos = np.repeat(starts - offsets[:-1], counts) + np.arange(offsets[-1])
    return SparseMatrix(idx.size, A.n_cols, offsets, A.col_indices[pos], A.values[pos], check=False)


def extract_columns(A: SparseMatrix, idx) -> SparseMatrix:
    """Columns ``idx`` of ``A``; column ``k`` of the result is column ``idx[k]`` of ``A``."""
    idx = _check_index_block(idx, A.n_cols, "column")
    sub = A._csr[:, idx]
    sub = sp.csr_matrix(sub)
    sub.sort_indices()
    return SparseMatrix(A.n_rows, idx.size, sub.indptr, sub.indices, sub.data, check=False)


def rse(A: SparseMatrix, x, b) -> float:
    """Relative square error ``||Ax - b||^2 / ||b||^2``."""
    b = _as_vector(b, A.n_rows, "rse")
    bb = float(b @ b)
    if bb == 0.0:
        raise ValueError("rse is undefined for b = 0")
    r = spmv(A, x) - b
    return float(r @ r) / bb
