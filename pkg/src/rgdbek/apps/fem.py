"""Linear (P1) finite elements for Poisson and Helmholtz on the unit square."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..solvers import SolveConfig, rgdbek
from ..sparse import SparseMatrix

# 7-point degree-5 rule on the reference triangle (barycentric points, weights sum to 1)
_A1, _B1 = 0.059715871789770, 0.470142064105115
_A2, _B2 = 0.797426985353087, 0.101286507323456
_DUNAVANT5 = (
    np.array([[1 / 3, 1 / 3, 1 / 3],
              [_A1, _B1, _B1], [_B1, _A1, _B1], [_B1, _B1, _A1],
              [_A2, _B2, _B2], [_B2, _A2, _B2], [_B2, _B2, _A2]]),
    np.array([0.225] + [0.132394152788506] * 3 + [0.125939180544827] * 3),
)
LOAD_RULES = ("consistent", "lumped", "centroid", "dunavant5")


@dataclass(frozen=True)
class TriMesh:
    nodes: np.ndarray       # (N, 2)
    triangles: np.ndarray   # (T, 3), counter-clockwise
    boundary_nodes: np.ndarray

    @property
    def n_nodes(self):
        return self.nodes.shape[0]

    @property
    def n_triangles(self):
        return self.triangles.shape[0]

    def areas(self) -> np.ndarray:
        p = self.nodes[self.triangles]
        d1, d2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    @property
    def interior_nodes(self) -> np.ndarray:
        mask = np.ones(self.n_nodes, dtype=bool)
        mask[self.boundary_nodes] = False
        return np.flatnonzero(mask)


def build_uniform_tri_mesh(nx: int, ny: int, diagonal: str = "alternating") -> TriMesh:
    """``nx*ny`` grid nodes on [0,1]^2, each cell cut into two triangles.

    ``diagonal`` picks the cut: ``"main"`` (lower-left to upper-right),
    ``"anti"``, or ``"alternating"`` (checkerboard of the two, which keeps
    the mesh free of a preferred direction).
    """
    if nx < 2 or ny < 2:
        raise ValueError(f"need nx, ny >= 2, got {nx}, {ny}")
    if diagonal not in ("main", "anti", "alternating"):
        raise ValueError(f"unknown diagonal pattern {diagonal!r}")
    X, Y = np.meshgrid(np.linspace(0.0, 1.0, nx), np.linspace(0.0, 1.0, ny))
    nodes = np.column_stack([X.ravel(), Y.ravel()])
    j, i = np.divmod(np.arange((nx - 1) * (ny - 1)), nx - 1)
    a = j * nx + i
    b, c = a + 1, a + nx
    d = c + 1
    if diagonal == "main":
        anti = np.zeros(a.size, dtype=bool)
    elif diagonal == "anti":
        anti = np.ones(a.size, dtype=bool)
    else:
        anti = (i + j) % 2 == 1
    t1 = np.where(anti[:, None], np.column_stack([a, b, c]), np.column_stack([a, b, d]))
    t2 = np.where(anti[:, None], np.column_stack([b, d, c]), np.column_stack([a, d, c]))
    tris = np.stack([t1, t2], axis=1).reshape(-1, 3)
    x, y = nodes[:, 0], nodes[:, 1]
    bnd = np.flatnonzero((x == 0.0) | (x == 1.0) | (y == 0.0) | (y == 1.0))
    return TriMesh(nodes, tris, bnd)


def _element_matrices(mesh: TriMesh):
    p = mesh.nodes[mesh.triangles]
    x, y = p[:, :, 0], p[:, :, 1]
    bx = np.stack([y[:, 1] - y[:, 2], y[:, 2] - y[:, 0], y[:, 0] - y[:, 1]], axis=1)
    cy = np.stack([x[:, 2] - x[:, 1], x[:, 0] - x[:, 2], x[:, 1] - x[:, 0]], axis=1)
    area = mesh.areas()
    if np.any(area <= 0):
        bad = int(np.flatnonzero(area <= 0)[0])
        raise ValueError(f"degenerate or clockwise triangle {bad}")
    K = (bx[:, :, None] * bx[:, None, :] + cy[:, :, None] * cy[:, None, :]) / (4 * area)[:, None, None]
    M = (np.ones((3, 3)) + np.eye(3))[None] * (area / 12)[:, None, None]
    return K, M, area


def _load_vector(mesh: TriMesh, f, rule: str, M_el, area) -> np.ndarray:
    p = mesh.nodes[mesh.triangles]
    if rule == "consistent":       # interpolate f, integrate exactly
        fe = np.einsum("tij,tj->ti", M_el, f(p[:, :, 0], p[:, :, 1]))
    elif rule == "lumped":
        fe = f(p[:, :, 0], p[:, :, 1]) * (area / 3)[:, None]
    elif rule == "centroid":
        c = p.mean(axis=1)
        fe = np.repeat((f(c[:, 0], c[:, 1]) * area / 3)[:, None], 3, axis=1)
    elif rule == "dunavant5":
        L, W = _DUNAVANT5
        q = np.einsum("qk,tkd->tqd", L, p)
        fq = f(q[:, :, 0], q[:, :, 1])
        fe = area[:, None] * np.einsum("qk,tq->tk", L, fq * W)
    else:
        raise ValueError(f"unknown load rule {rule!r}; expected one of {LOAD_RULES}")
    return np.bincount(mesh.triangles.ravel(), weights=fe.ravel(), minlength=mesh.n_nodes)


def _global(mesh, E):
    t = mesh.triangles
    rows = np.repeat(t, 3, axis=1).ravel()
    cols = np.tile(t, (1, 3)).ravel()
    return rows, cols, E.ravel()


def _restrict(mesh, rows, cols, vals, F, dirichlet):
    """Impose homogeneous Dirichlet data; returns ``(A, b, dof_nodes)``."""
    N = mesh.n_nodes
    on_bnd = np.zeros(N, dtype=bool)
    on_bnd[mesh.boundary_nodes] = True
    if dirichlet == "eliminate":
        dofs = mesh.interior_nodes
        renum = -np.ones(N, dtype=np.int64)
        renum[dofs] = np.arange(dofs.size)
        keep = ~on_bnd[rows] & ~on_bnd[cols]
        A = SparseMatrix.from_coo(renum[rows[keep]], renum[cols[keep]], vals[keep], (dofs.size, dofs.size))
        b = F[dofs]
    elif dirichlet == "identity":
        dofs = np.arange(N)
        keep = ~on_bnd[rows] & ~on_bnd[cols]
        bn = mesh.boundary_nodes
        A = SparseMatrix.from_coo(np.concatenate([rows[keep], bn]), np.concatenate([cols[keep], bn]),
                                  np.concatenate([vals[keep], np.ones(bn.size)]), (N, N))
        b = np.where(on_bnd, 0.0, F)
    else:
        raise ValueError(f"dirichlet must be 'eliminate' or 'identity', got {dirichlet!r}")
    return _drop_zeros(A), b, dofs


def _drop_zeros(A: SparseMatrix) -> SparseMatrix:
    nz = A.values != 0.0
    if nz.all():
        return A
    rows = np.repeat(np.arange(A.n_rows), A.row_nnz())
    return SparseMatrix.from_coo(rows[nz], A.col_indices[nz], A.values[nz], A.shape)


def assemble_poisson(mesh: TriMesh, f, load_rule: str = "consistent", dirichlet: str = "eliminate"):
    """Stiffness system for ``-lap u = f``, ``u = 0`` on the boundary.

    Returns ``(A, b, dofs)`` where ``dofs[i]`` is the mesh node of unknown ``i``.
    Entries that cancel to exactly zero are not stored.
    """
    K, M, area = _element_matrices(mesh)
    F = _load_vector(mesh, f, load_rule, M, area)
    return _restrict(mesh, *_global(mesh, K), F, dirichlet)


def assemble_helmholtz(mesh: TriMesh, wavenumber: float, f, load_rule: str = "consistent",
                       dirichlet: str = "eliminate"):
    """``K - k^2 M`` system for ``-lap u - k^2 u = f`` (consistent P1 mass matrix)."""
    K, M, area = _element_matrices(mesh)
    F = _load_vector(mesh, f, load_rule, M, area)
    k2 = float(wavenumber) ** 2
    return _restrict(mesh, *_global(mesh, K - k2 * M), F, dirichlet)


def mass_matrix(mesh: TriMesh) -> SparseMatrix:
    _, M, _ = _element_matrices(mesh)
    r, c, v = _global(mesh, M)
    return SparseMatrix.from_coo(r, c, v, (mesh.n_nodes, mesh.n_nodes))


def sparsity(A: SparseMatrix) -> float:
    """Fraction of zero entries, ``1 - nnz / (m n)``."""
    return 1.0 - A.nnz / (A.n_rows * A.n_cols)


def relative_l2_error(u_h, u_exact) -> float:
    u_h = np.asarray(u_h, dtype=np.float64)
    u_exact = np.asarray(u_exact, dtype=np.float64)
    den = np.linalg.norm(u_exact)
    if den == 0.0:
        raise ValueError("exact solution vanishes on the unknowns; relative error undefined")
    return float(np.linalg.norm(u_h - u_exact) / den)


def fem_solve_and_error(A: SparseMatrix, b, exact, mesh: TriMesh, dofs, cfg: SolveConfig = SolveConfig()):
    """Solve with RGDBEK; nodal relative L2 error over the interior nodes.

    Returns ``(u_h, error, result)`` with ``u_h`` the full nodal vector
    (zero on the boundary).
    """
    res = rgdbek(A, b, cfg)
    u = np.zeros(mesh.n_nodes)
    u[dofs] = res.x
    inner = mesh.interior_nodes
    xy = mesh.nodes[inner]
    err = relative_l2_error(u[inner], exact(xy[:, 0], xy[:, 1]))
    return u, err, res


# -- the two model problems ----------------------------------------------

def poisson_problem():
    """``u = sin(pi x) sin(pi y)``, ``f = 2 pi^2 u``."""
    def exact(x, y):
        return np.sin(np.pi * x) * np.sin(np.pi * y)

    def f(x, y):
        return 2 * np.pi ** 2 * exact(x, y)
    return exact, f


def helmholtz_problem(wavenumber: float):
    """``u = sin(4 pi x) sin(4 pi y)``, ``f = (32 pi^2 - k^2) u``."""
    k2 = float(wavenumber) ** 2

    def exact(x, y):
        return np.sin(4 * np.pi * x) * np.sin(4 * np.pi * y)

    def f(x, y):
        return (32 * np.pi ** 2 - k2) * exact(x, y)
    return exact, f
