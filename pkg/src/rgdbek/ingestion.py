"""Matrix Market I/O, random test matrices and right-hand sides."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lsqr import LsqrOptions, lsqr
from .sparse import SparseMatrix, spmv


class MatrixMarketError(ValueError):
    def __init__(self, msg, line=None):
        self.line = line
        super().__init__(f"line {line}: {msg}" if line is not None else msg)


def read_matrix_market(path) -> SparseMatrix:
    """Read a real ``coordinate`` or ``array`` Matrix Market file.

    ``general`` and ``symmetric`` layouts are accepted; symmetric files are
    mirrored, duplicate coordinates summed.
    """
    with open(path, "r") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise MatrixMarketError("empty file", 1)
    head = lines[0].split()
    if len(head) != 5 or head[0] != "%%MatrixMarket" or head[1].lower() != "matrix":
        raise MatrixMarketError("malformed header", 1)
    fmt, field_, symm = (h.lower() for h in head[2:])
    if fmt not in ("coordinate", "array"):
        raise MatrixMarketError(f"unsupported format {fmt!r}", 1)
    if field_ not in ("real", "integer", "double"):
        raise MatrixMarketError(f"unsupported field {field_!r}", 1)
    if symm not in ("general", "symmetric"):
        raise MatrixMarketError(f"unsupported symmetry {symm!r}", 1)

    body = [(no, ln.split()) for no, ln in enumerate(lines[1:], start=2)
            if ln.strip() and not ln.lstrip().startswith("%")]
    if not body:
        raise MatrixMarketError("missing size line", len(lines))
    size_no, size = body[0]
    try:
        dims = [int(t) for t in size]
    except ValueError:
        raise MatrixMarketError("bad size line", size_no) from None
    entries = body[1:]

    rows, cols, vals = [], [], []
    if fmt == "coordinate":
        if len(dims) != 3:
            raise MatrixMarketError("coordinate size line needs rows cols nnz", size_no)
        m, n, nnz = dims
        if len(entries) != nnz:
            raise MatrixMarketError(f"expected {nnz} entries, found {len(entries)}", size_no)
        for no, tok in entries:
            if len(tok) != 3:
                raise MatrixMarketError("expected 'row col value'", no)
            try:
                i, j, v = int(tok[0]) - 1, int(tok[1]) - 1, float(tok[2])
            except ValueError:
                raise MatrixMarketError("unparsable entry", no) from None
            if not (0 <= i < m and 0 <= j < n):
                raise MatrixMarketError(f"index ({i + 1}, {j + 1}) outside {m}x{n}", no)
            rows.append(i), cols.append(j), vals.append(v)
            if symm == "symmetric" and i != j:
                rows.append(j), cols.append(i), vals.append(v)
    else:
        if len(dims) != 2:
            raise MatrixMarketError("array size line needs rows cols", size_no)
        m, n = dims
        # column-major; symmetric stores the lower triangle only
        pos = [(i, j) for j in range(n) for i in range(m) if symm == "general" or i >= j]
        if len(entries) != len(pos):
            raise MatrixMarketError(f"expected {len(pos)} values, found {len(entries)}", size_no)
        for (i, j), (no, tok) in zip(pos, entries):
            try:
                v = float(tok[0])
            except (ValueError, IndexError):
                raise MatrixMarketError("unparsable value", no) from None
            rows.append(i), cols.append(j), vals.append(v)
            if symm == "symmetric" and i != j:
                rows.append(j), cols.append(i), vals.append(v)
    return SparseMatrix.from_coo(rows, cols, vals, (m, n))


def write_matrix_market(A: SparseMatrix, path) -> None:
    """Write ``A`` as ``coordinate real general`` with round-trip-exact values."""
    rows = np.repeat(np.arange(A.n_rows), A.row_nnz())
    with open(path, "w") as fh:
        fh.write("%%MatrixMarket matrix coordinate real general\n")
        fh.write(f"{A.n_rows} {A.n_cols} {A.nnz}\n")
        for i, j, v in zip(rows, A.col_indices, A.values):
            fh.write(f"{i + 1} {j + 1} {float(v)!r}\n")


def gen_sparse_random(m: int, n: int, density: float, seed=0) -> SparseMatrix:
    """``round(density*m*n)`` distinct uniform positions with N(0, 1) values."""
    if not 0 < density <= 1:
        raise ValueError(f"density must lie in (0, 1], got {density}")
    rng = np.random.default_rng(seed)
    total = m * n
    nnz = int(round(density * total))
    flat = rng.choice(total, size=nnz, replace=False) if nnz < total else np.arange(total)
    vals = rng.standard_normal(nnz)
    return SparseMatrix.from_coo(flat // n, flat % n, vals, (m, n))


@dataclass(frozen=True)
class RhsSpec:
    mode: str = "consistent"
    noise_seed: int = 0
    noise_ratio: float = 0.1

    def __post_init__(self):
        if self.mode not in ("consistent", "inconsistent"):
            raise ValueError(f"unknown rhs mode {self.mode!r}")


def _orthogonal_to_range(A: SparseMatrix, g, sweeps=3):
    opts = LsqrOptions(rel_tolerance=1e-14, max_inner_iters=4 * max(A.shape))
    r = g.copy()
    for _ in range(sweeps):
        y, _, _ = lsqr(A, r, opts)
        r = r - spmv(A, y)
    return r


def build_rhs(A: SparseMatrix, x_true, spec: RhsSpec = RhsSpec()):
    """``b = A x_true`` or ``b = A x_true + r`` with ``r`` orthogonal to range(A).

    In inconsistent mode ``||r|| = noise_ratio * ||A x_true||``.

    Returns
    -------
    b, x_true
    """
    x_true = np.asarray(x_true, dtype=np.float64)
    ax = spmv(A, x_true)
    if spec.mode == "consistent":
        return ax, x_true
    scale = np.linalg.norm(ax)
    if scale == 0.0:
        raise ValueError("A x_true = 0: cannot scale the inconsistent component")
    g = np.random.default_rng(spec.noise_seed).standard_normal(A.n_rows)
    r = _orthogonal_to_range(A, g)
    rn = np.linalg.norm(r)
    if rn <= 1e-10 * np.linalg.norm(g):
        raise ValueError("range(A) spans the whole space; no inconsistent component exists")
    r *= spec.noise_ratio * scale / rn
    return ax + r, x_true


def random_system(m, n, density, seed=0, rhs: RhsSpec = RhsSpec()):
    """Random sparse ``A``, standard-normal ``x_true`` and ``b``; returns ``(A, b, x_true)``."""
    A = gen_sparse_random(m, n, density, seed)
    x_true = np.random.default_rng([seed, 1]).standard_normal(n)
    b, x_true = build_rhs(A, x_true, rhs)
    return A, b, x_true

