"""Local operators of the lowest-order nonconforming VEM.

Linear polynomials are written in the scaled monomial basis
``{1, (x - xc)/s, (y - yc)/s}``.  A projector matrix maps a vector of face
averages to the three coefficients of the projected polynomial.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import polygon as pg
from .geometry import Patch, make_patch
from .mesh import Mesh
from .quadrature import edge_average, polygon_rule


class ZeroAreaCell(ValueError):
    pass


@dataclass(frozen=True)
class MonomialBasis:
    center: np.ndarray
    scale: float

    def __call__(self, pts) -> np.ndarray:
        p = np.atleast_2d(np.asarray(pts, dtype=float))
        q = (p - self.center) / self.scale
        return np.column_stack([np.ones(len(p)), q])

    def grad(self) -> np.ndarray:
        """(3, 2) gradients of the basis members."""
        g = np.zeros((3, 2))
        g[1, 0] = g[2, 1] = 1.0 / self.scale
        return g

    def coefficients(self, a: float, b: float, c: float) -> np.ndarray:
        """Coefficients of a + b x + c y."""
        xc, yc = self.center
        s = self.scale
        return np.array([a + b * xc + c * yc, b * s, c * s])

    def evaluate(self, coef, pts) -> np.ndarray:
        return self(pts) @ np.asarray(coef)

    def gradient(self, coef) -> np.ndarray:
        return np.asarray(coef) @ self.grad()


def dof_of(f, a, b, q: int = 4) -> float:
    """Face average of a sampler ``f(x, y)`` by q-point Gauss-Legendre."""
    return edge_average(f, a, b, q)


def qf_project(f, a, b, q: int = 4) -> float:
    """L2 projection onto constants on the segment ab (the face average)."""
    return edge_average(f, a, b, q)


def dof_matrix(midpoints, basis: MonomialBasis) -> np.ndarray:
    """n x 3 matrix of face averages of the basis (linear: midpoint values)."""
    return basis(midpoints)


def projector_matrix(basis: MonomialBasis, area: float, normals, lengths, midpoints,
                     grad_mask=None, constraint_mask=None) -> np.ndarray:
    """3 x n matrix of the elliptic projection from face averages.

    The gradient is  area^-1 sum_F n_F |F| chi_F  over faces in ``grad_mask``;
    the constant matches the boundary integral over faces in ``constraint_mask``.
    """
    if not area > 0:
        raise ZeroAreaCell(f"non-positive area {area}")
    normals = np.asarray(normals, dtype=float)
    lengths = np.asarray(lengths, dtype=float)
    n = len(lengths)
    gm = np.ones(n) if grad_mask is None else np.asarray(grad_mask, dtype=float)
    cm = np.ones(n) if constraint_mask is None else np.asarray(constraint_mask, dtype=float)
    P = np.zeros((3, n))
    P[1:] = (normals * (lengths * gm)[:, None]).T * (basis.scale / area)
    D = dof_matrix(midpoints, basis)
    w = lengths * cm
    P[0] = (w - (w @ D[:, 1:]) @ P[1:]) / w.sum()
    return P


@dataclass(frozen=True)
class CellGeometry:
    area: float
    centroid: np.ndarray
    diameter: float
    faces: np.ndarray
    normals: np.ndarray
    lengths: np.ndarray
    midpoints: np.ndarray

    @property
    def basis(self) -> MonomialBasis:
        return MonomialBasis(self.centroid, self.diameter)


def cell_geometry(mesh: Mesh, c: int) -> CellGeometry:
    f = mesh.cell2face[c]
    area = float(mesh.cell_area[c])
    if not area > 0:
        raise ZeroAreaCell(f"cell {c} has area {area}")
    return CellGeometry(area, mesh.cell_centroid[c], float(mesh.cell_diameter[c]), f,
                        mesh.outward_normals(c), mesh.face_length[f], mesh.face_midpoint[f])


def polygon_geometry(coords) -> CellGeometry:
    """CellGeometry of a bare CCW polygon (faces numbered by edge)."""
    p = np.asarray(coords, dtype=float)
    e = np.roll(p, -1, axis=0) - p
    L = np.hypot(e[:, 0], e[:, 1])
    n = np.column_stack([e[:, 1], -e[:, 0]]) / L[:, None]
    a = pg.signed_area(p)
    if not a > 0:
        raise ZeroAreaCell(f"polygon area {a}")
    return CellGeometry(a, pg.centroid(p), pg.diameter(p), np.arange(len(p)), n, L,
                        0.5 * (p + np.roll(p, -1, axis=0)))


def _as_geometry(cell, mesh=None) -> CellGeometry:
    if isinstance(cell, CellGeometry):
        return cell
    if mesh is not None:
        return cell_geometry(mesh, int(cell))
    return polygon_geometry(cell)


def cell_projector(geo: CellGeometry, basis: MonomialBasis | None = None) -> np.ndarray:
    return projector_matrix(basis or geo.basis, geo.area, geo.normals, geo.lengths, geo.midpoints)


def elliptic_projector(cell, dofs, mesh: Mesh | None = None):
    """Pi_K of the function with face averages ``dofs``; returns (coef, basis)."""
    geo = _as_geometry(cell, mesh)
    P = cell_projector(geo)
    return P @ np.asarray(dofs, dtype=float), geo.basis


@dataclass(frozen=True)
class PatchGeometry:
    """Per-patch-dof data; normals are outward w.r.t. omega on its boundary
    and w.r.t. K on K's own faces."""
    patch: Patch
    basis: MonomialBasis
    normals: np.ndarray
    lengths: np.ndarray
    midpoints: np.ndarray


def patch_geometry(mesh: Mesh, patch: Patch) -> PatchGeometry:
    dofs = patch.dofs
    normals = mesh.face_normal[dofs].copy()
    sign = np.zeros(len(dofs))
    pos = {int(f): i for i, f in enumerate(dofs)}
    for f, s in zip(patch.merged.boundary_faces, patch.merged.boundary_signs):
        sign[pos[int(f)]] = s
    sign[:patch.n_own] = mesh.cell2sign[patch.cell]
    normals *= sign[:, None]
    m = patch.merged
    basis = MonomialBasis(pg.centroid(m.coords), m.diameter)
    return PatchGeometry(patch, basis, normals, mesh.face_length[dofs], mesh.face_midpoint[dofs])


def patch_projector_matrix(mesh: Mesh, patch: Patch, pgeo: PatchGeometry | None = None) -> np.ndarray:
    """3 x n_omega matrix of Pi_omega; interior-face columns vanish."""
    pgeo = pgeo or patch_geometry(mesh, patch)
    return projector_matrix(pgeo.basis, patch.area, pgeo.normals, pgeo.lengths, pgeo.midpoints,
                            patch.on_boundary, patch.on_boundary)


def patch_projector(mesh: Mesh, patch: Patch, dofs):
    """Pi_omega of patch face averages (ordered as ``patch.dofs``); (coef, basis)."""
    pgeo = patch_geometry(mesh, patch)
    return patch_projector_matrix(mesh, patch, pgeo) @ np.asarray(dofs, dtype=float), pgeo.basis


def cell_projector_in_patch(mesh: Mesh, patch: Patch, pgeo: PatchGeometry | None = None) -> np.ndarray:
    """3 x n_omega matrix of Pi_K with its constant fixed on the boundary of omega.

    For a singleton patch this is the usual Pi_K.
    """
    pgeo = pgeo or patch_geometry(mesh, patch)
    own = np.zeros(patch.n_dofs)
    own[:patch.n_own] = 1.0
    return projector_matrix(pgeo.basis, float(mesh.cell_area[patch.cell]), pgeo.normals, pgeo.lengths,
                            pgeo.midpoints, own, patch.on_boundary)


def consistency_matrix(cell, mesh: Mesh | None = None) -> np.ndarray:
    """|K| grad(Pi phi_i) . grad(Pi phi_j) with grad(Pi phi_i) = n_i |F_i| / |K|."""
    geo = _as_geometry(cell, mesh)
    N = geo.normals * geo.lengths[:, None]
    return N @ N.T / geo.area


def stabilization_matrix(mesh: Mesh, patch: Patch, Pi: np.ndarray | None = None,
                         pgeo: PatchGeometry | None = None) -> np.ndarray:
    """h_omega^-1 (I_bar - D Pi_omega)^T diag(|F_i|) (I_bar - D Pi_omega), size n_omega."""
    pgeo = pgeo or patch_geometry(mesh, patch)
    if Pi is None:
        Pi = patch_projector_matrix(mesh, patch, pgeo)
    nK, nw = patch.n_own, patch.n_dofs
    D = dof_matrix(pgeo.midpoints[:nK], pgeo.basis)
    if D.shape != (nK, 3) or Pi.shape != (3, nw):
        raise ValueError(f"dimension mismatch: D {D.shape}, Pi {Pi.shape}, n_omega {nw}")
    Ibar = np.eye(nK, nw)
    R = Ibar - D @ Pi
    S = R.T @ (pgeo.lengths[:nK, None] * R) / patch.h
    return 0.5 * (S + S.T)


def stabilization_matrix_original(cell, mesh: Mesh | None = None) -> np.ndarray:
    """(I - D Pi_K)^T (I - D Pi_K): face weights h_F^(d-2) = 1 in two dimensions."""
    geo = _as_geometry(cell, mesh)
    D = dof_matrix(geo.midpoints, geo.basis)
    R = np.eye(len(geo.lengths)) - D @ cell_projector(geo)
    S = R.T @ R
    return 0.5 * (S + S.T)


def local_load(mesh: Mesh, cell: int, f, patch: Patch | None = None, Pi: np.ndarray | None = None,
               basis: MonomialBasis | None = None) -> np.ndarray:
    """b_j = int_K f Pi_K phi_j over the patch dofs (K's faces when no patch).

    Cells are integrated with a degree-4 rule on a centroid fan (ear clipping
    when the cell is not star-shaped w.r.t. its centroid).
    """
    if Pi is None:
        if patch is None:
            patch = make_patch(mesh, cell, [cell])
        pgeo = patch_geometry(mesh, patch)
        Pi, basis = cell_projector_in_patch(mesh, patch, pgeo), pgeo.basis
    pts, w = polygon_rule(mesh.cell_coords(cell))
    fw = w * np.asarray(f(pts[:, 0], pts[:, 1]), dtype=float)
    return (basis(pts) @ Pi).T @ fw


@dataclass(frozen=True)
class LocalOperators:
    dofs: np.ndarray          # global face ids, K's own faces first
    D: np.ndarray             # n_K x 3
    Pi: np.ndarray            # 3 x n (stabilization projector)
    Kc: np.ndarray            # n_K x n_K
    S: np.ndarray             # n x n
    face_areas: np.ndarray    # |F_i| of K's faces
    h_used: float
    PiK: np.ndarray           # 3 x n, Pi_K (load projector)
    basis: MonomialBasis


def local_operators(mesh: Mesh, patch: Patch, kind: str = "patch") -> LocalOperators:
    """All element matrices for one cell.

    ``kind='patch'`` uses the extended-patch stabilization; ``kind='original'``
    ignores the patch and uses the h_F^0-weighted face-average stabilization.
    """
    c = patch.cell
    if kind == "original" or patch.singleton:
        geo = cell_geometry(mesh, c)
        basis = geo.basis
        PiK = cell_projector(geo)
        D = dof_matrix(geo.midpoints, basis)
        if kind == "original":
            S = stabilization_matrix_original(geo)
            h = 1.0
        else:
            pgeo = PatchGeometry(patch, basis, geo.normals, geo.lengths, geo.midpoints)
            S = stabilization_matrix(mesh, patch, PiK, pgeo)
            h = geo.diameter
        return LocalOperators(geo.faces.copy(), D, PiK, consistency_matrix(geo), S, geo.lengths, h, PiK, basis)
    if kind != "patch":
        raise ValueError(f"unknown stabilization kind {kind!r}")
    pgeo = patch_geometry(mesh, patch)
    Pi = patch_projector_matrix(mesh, patch, pgeo)
    S = stabilization_matrix(mesh, patch, Pi, pgeo)
    PiK = cell_projector_in_patch(mesh, patch, pgeo)
    D = dof_matrix(pgeo.midpoints[:patch.n_own], pgeo.basis)
    return LocalOperators(patch.dofs.copy(), D, Pi, consistency_matrix(c, mesh), S,
                          pgeo.lengths[:patch.n_own], patch.h, PiK, pgeo.basis)
