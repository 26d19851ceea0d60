"""Global assembly over face dofs, Dirichlet lifting and a Jacobi-PCG solver."""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .geometry import Patch, singleton_patches
from .mesh import Mesh
from .quadrature import edge_average
from .vemcore import local_load, local_operators

log = logging.getLogger(__name__)

STAB_KINDS = ("patch", "original")


class PatchMissing(ValueError):
    pass


class NotConverged(RuntimeError):
    def __init__(self, iterations: int, residual: float, msg: str | None = None):
        self.iterations = iterations
        self.residual = residual
        super().__init__(msg or f"CG not converged after {iterations} iterations (rel. residual {residual:.3e})")


class CGBreakdown(NotConverged):
    pass


@dataclass
class SparseSystem:
    A: sp.csr_matrix
    b: np.ndarray
    boundary_dofs: np.ndarray
    free_dofs: np.ndarray
    stab_kind: str
    mesh: Mesh

    @property
    def n(self) -> int:
        return self.A.shape[0]


@dataclass
class ReducedSystem:
    A: sp.csr_matrix
    b: np.ndarray
    g: np.ndarray            # prescribed values on boundary_dofs
    free_dofs: np.ndarray
    boundary_dofs: np.ndarray
    n: int

    def expand(self, x_free) -> np.ndarray:
        x = np.zeros(self.n)
        x[self.free_dofs] = x_free
        x[self.boundary_dofs] = self.g
        return x


def _element_triplets(mesh, patch, kind, f):
    ops = local_operators(mesh, patch, kind)
    nK = len(mesh.cell2face[patch.cell])
    own = ops.dofs[:nK]
    rows = [np.repeat(own, nK), np.repeat(ops.dofs, len(ops.dofs))]
    cols = [np.tile(own, nK), np.tile(ops.dofs, len(ops.dofs))]
    vals = [ops.Kc.ravel(), ops.S.ravel()]
    if f is None:
        load = np.zeros(len(ops.dofs))
    else:
        load = local_load(mesh, patch.cell, f, Pi=ops.PiK, basis=ops.basis)
    bdofs = ops.dofs if kind == "patch" else own
    return np.concatenate(rows), np.concatenate(cols), np.concatenate(vals), bdofs, load


def assemble(mesh: Mesh, patches=None, kind: str = "patch", f=None, threads: int = 1,
             order=None) -> SparseSystem:
    """Assemble a_h and the load sum_K (f, Pi_K v)_K.

    ``patches`` is one Patch per cell (singletons if omitted).  Cells are
    processed in ``order`` (index order by default); triplets are summed in
    sorted (row, col) order by the CSR conversion, so the result does not
    depend on the order or the thread count.
    """
    if kind not in STAB_KINDS:
        raise ValueError(f"unknown stabilization kind {kind!r}")
    if patches is None:
        patches = singleton_patches(mesh)
    if len(patches) != mesh.n_cells:
        raise PatchMissing("need one patch per cell")
    for c, p in enumerate(patches):
        if p is None or not isinstance(p, Patch) or p.cell != c:
            raise PatchMissing(f"no patch for cell {c}")
    order = range(mesh.n_cells) if order is None else order

    def work(cells):
        return [_element_triplets(mesh, patches[c], kind, f) for c in cells]

    cells = list(order)
    if threads > 1 and len(cells) > 1:
        chunks = [cells[i::threads] for i in range(threads)]
        with ThreadPoolExecutor(threads) as ex:
            parts = [t for part in ex.map(work, chunks) for t in part]
    else:
        parts = work(cells)
    n = mesh.n_faces
    rows = np.concatenate([p[0] for p in parts])
    cols = np.concatenate([p[1] for p in parts])
    vals = np.concatenate([p[2] for p in parts])
    # deterministic summation: sort triplets, then reduce duplicates
    key = np.lexsort((vals, cols, rows))
    A = sp.coo_matrix((vals[key], (rows[key], cols[key])), shape=(n, n)).tocsr()
    A.sum_duplicates()
    b = np.zeros(n)
    loads = sorted(((int(d), float(v)) for p in parts for d, v in zip(p[3], p[4])))
    for d, v in loads:
        b[d] += v
    bnd = mesh.boundary_faces.copy()
    free = np.setdiff1d(np.arange(n), bnd)
    return SparseSystem(A, b, bnd, free, kind, mesh)


def boundary_values(mesh: Mesh, g, q: int = 4) -> np.ndarray:
    """chi_F(g) on the boundary faces."""
    out = np.empty(len(mesh.boundary_faces))
    for i, f in enumerate(mesh.boundary_faces):
        a, b = mesh.vertices[mesh.faces[f]]
        out[i] = edge_average(g, a, b, q)
    return out


def apply_dirichlet(system: SparseSystem, g=None) -> ReducedSystem:
    """Prescribe boundary face averages chi_F(g) and move them to the right-hand side."""
    bnd, free = system.boundary_dofs, system.free_dofs
    gv = np.zeros(len(bnd)) if g is None else boundary_values(system.mesh, g)
    A = system.A
    Aff = A[free][:, free].tocsr()
    bf = system.b[free] - A[free][:, bnd] @ gv
    return ReducedSystem(Aff, bf, gv, free, bnd, system.n)


@dataclass
class CGResult:
    x: np.ndarray
    iterations: int
    residual: float


def solve_cg(A, b, rtol: float = 1e-10, maxiter: int | None = None, x0=None) -> CGResult:
    """Jacobi-preconditioned conjugate gradients; stops at ||Ax - b|| <= rtol ||b||."""
    b = np.asarray(b, dtype=float)
    n = len(b)
    if maxiter is None:
        maxiter = max(10 * n, 100)
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    bnorm = float(np.linalg.norm(b))
    if n == 0 or bnorm == 0.0:
        return CGResult(np.zeros(n), 0, 0.0)
    diag = A.diagonal() if hasattr(A, "diagonal") else np.diag(A)
    if np.any(diag <= 0):
        raise CGBreakdown(0, 1.0, "non-positive diagonal; matrix is not SPD")
    Minv = 1.0 / diag
    r = b - A @ x
    z = Minv * r
    p = z.copy()
    rz = float(r @ z)
    res = float(np.linalg.norm(r)) / bnorm
    for it in range(1, maxiter + 1):
        if res <= rtol:
            return CGResult(x, it - 1, res)
        Ap = A @ p
        pAp = float(p @ Ap)
        if pAp <= 0.0:
            raise CGBreakdown(it, res, f"CG breakdown at iteration {it}: p^T A p = {pAp:.3e}")
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        res = float(np.linalg.norm(r)) / bnorm
        z = Minv * r
        rz_new = float(r @ z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    if res <= rtol:
        return CGResult(x, maxiter, res)
    raise NotConverged(maxiter, res)


@dataclass
class Solution:
    dofs: np.ndarray
    stab_kind: str
    system: SparseSystem
    iterations: int


def solve(mesh: Mesh, patches=None, kind: str = "patch", f=None, g=None, rtol: float = 1e-11,
          maxiter: int | None = None, threads: int = 1) -> Solution:
    """Assemble, lift the Dirichlet data and solve."""
    system = assemble(mesh, patches, kind, f, threads)
    red = apply_dirichlet(system, g)
    if len(red.free_dofs) == 0:
        return Solution(red.expand(np.zeros(0)), kind, system, 0)
    res = solve_cg(red.A, red.b, rtol, maxiter)
    log.debug("cg: %d iterations, residual %.2e", res.iterations, res.residual)
    return Solution(red.expand(res.x), kind, system, res.iterations)


def write_coo(A, path) -> None:
    """Matrix as 'row col value' lines (0-based, 17 significant digits)."""
    C = sp.coo_matrix(A)
    key = np.lexsort((C.col, C.row))
    with open(path, "w") as fh:
        fh.write(f"# {C.shape[0]} {C.shape[1]} {C.nnz}\n")
        for i in key:
            fh.write(f"{C.row[i]} {C.col[i]} {C.data[i]:.17g}\n")
