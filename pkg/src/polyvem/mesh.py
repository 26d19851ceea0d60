"""Polygonal meshes: construction, generators, cell merging and text I/O.

A mesh is stored as a vertex array plus counterclockwise vertex cycles, with
the face list and the face/cell incidence arrays derived once at build time.
Face ``k`` of a cell joins its ``k``-th and ``(k+1)``-th vertices.
"""
from __future__ import annotations

import os
from collections import deque
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import polygon as pg


class MeshError(ValueError):
    pass


class DuplicateVertexInCell(MeshError):
    pass


class NegativeArea(MeshError):
    pass


class NonManifoldFace(MeshError):
    pass


class SelfIntersectingCell(MeshError):
    pass


class CutOutOfRange(MeshError):
    pass


class UnknownFixture(MeshError):
    pass


class DisconnectedSelection(MeshError):
    pass


class SelectionWithHole(MeshError):
    pass


class ParseError(MeshError):
    def __init__(self, msg, line=None):
        self.line = line
        super().__init__(f"line {line}: {msg}" if line is not None else msg)


def _frozen(a):
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


class Mesh:
    """Immutable polygonal mesh.

    Attributes
    ----------
    vertices : (nv, 2) float array
    cells : tuple of vertex-index tuples (CCW)
    faces : (nf, 2) int array, lower vertex index first
    face2cell : (nf, 2) int array, second column -1 on the boundary
    cell2face : tuple of int arrays, faces of each cell in cycle order
    cell2sign : tuple of int arrays, +1 where the cycle runs along the
        canonical face direction (then the canonical normal is outward)
    slivers : dict mapping generated sliver cells to their full-cell neighbor
    """

    def __init__(self, vertices, cells, faces, face2cell, cell2face, cell2sign, slivers=None):
        self.vertices = _frozen(np.asarray(vertices, dtype=float))
        self.cells = tuple(tuple(int(i) for i in c) for c in cells)
        self.faces = _frozen(faces)
        self.face2cell = _frozen(face2cell)
        self.cell2face = tuple(_frozen(f) for f in cell2face)
        self.cell2sign = tuple(_frozen(s) for s in cell2sign)
        self.slivers = dict(slivers or {})

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    def cell_coords(self, c: int) -> np.ndarray:
        return self.vertices[list(self.cells[c])]

    @cached_property
    def cell_area(self) -> np.ndarray:
        return _frozen(np.array([pg.signed_area(self.cell_coords(c)) for c in range(self.n_cells)]))

    @cached_property
    def cell_centroid(self) -> np.ndarray:
        return _frozen(np.array([pg.centroid(self.cell_coords(c)) for c in range(self.n_cells)]))

    @cached_property
    def cell_diameter(self) -> np.ndarray:
        return _frozen(np.array([pg.diameter(self.cell_coords(c)) for c in range(self.n_cells)]))

    @cached_property
    def face_length(self) -> np.ndarray:
        d = self.vertices[self.faces[:, 1]] - self.vertices[self.faces[:, 0]]
        return _frozen(np.hypot(d[:, 0], d[:, 1]))

    @cached_property
    def face_midpoint(self) -> np.ndarray:
        return _frozen(0.5 * (self.vertices[self.faces[:, 0]] + self.vertices[self.faces[:, 1]]))

    @cached_property
    def face_normal(self) -> np.ndarray:
        """Unit normal to the right of the canonical direction a -> b."""
        d = self.vertices[self.faces[:, 1]] - self.vertices[self.faces[:, 0]]
        n = np.column_stack([d[:, 1], -d[:, 0]])
        return _frozen(n / self.face_length[:, None])

    @cached_property
    def boundary_faces(self) -> np.ndarray:
        return _frozen(np.flatnonzero(self.face2cell[:, 1] < 0))

    @cached_property
    def h(self) -> float:
        return float(self.cell_diameter.max())

    def outward_normals(self, c: int) -> np.ndarray:
        return self.face_normal[self.cell2face[c]] * self.cell2sign[c][:, None]

    def neighbors(self, c: int) -> list[int]:
        out = []
        for f in self.cell2face[c]:
            a, b = self.face2cell[f]
            o = b if a == c else a
            if o >= 0:
                out.append(int(o))
        return out

    def domain_area(self) -> float:
        """Area enclosed by the boundary faces (independent of the cell areas)."""
        total = 0.0
        for f in self.boundary_faces:
            c = self.face2cell[f, 0]
            k = int(np.flatnonzero(self.cell2face[c] == f)[0])
            a, b = self.faces[f]
            if self.cell2sign[c][k] < 0:
                a, b = b, a
            (x0, y0), (x1, y1) = self.vertices[a], self.vertices[b]
            total += 0.5 * (x0 * y1 - x1 * y0)
        return total

    def summary(self) -> dict:
        return {
            "cells": self.n_cells,
            "faces": self.n_faces,
            "boundary_faces": int(len(self.boundary_faces)),
            "h": self.h,
            "min_area": float(self.cell_area.min()),
            "max_area": float(self.cell_area.max()),
        }


def build_mesh(vertices, cells, slivers=None, check_simple: bool = True) -> Mesh:
    verts = np.asarray(vertices, dtype=float).reshape(-1, 2)
    nv = len(verts)
    face_id: dict[tuple[int, int], int] = {}
    faces, f2c = [], []
    c2f, c2s = [], []
    for ci, cyc in enumerate(cells):
        cyc = [int(i) for i in cyc]
        if len(cyc) < 3:
            raise MeshError(f"cell {ci} has fewer than 3 vertices")
        if any(i < 0 or i >= nv for i in cyc):
            raise MeshError(f"cell {ci} references a vertex out of range")
        if len(set(cyc)) != len(cyc):
            raise DuplicateVertexInCell(f"cell {ci} repeats a vertex: {cyc}")
        coords = verts[cyc]
        if pg.signed_area(coords) <= 0:
            raise NegativeArea(f"cell {ci} is not counterclockwise (signed area {pg.signed_area(coords):.3g})")
        if check_simple and not pg.is_simple(coords):
            raise SelfIntersectingCell(f"cell {ci} is self-intersecting")
        fl, sl = [], []
        for k in range(len(cyc)):
            a, b = cyc[k], cyc[(k + 1) % len(cyc)]
            key = (a, b) if a < b else (b, a)
            f = face_id.get(key)
            if f is None:
                f = face_id[key] = len(faces)
                faces.append(key)
                f2c.append([ci, -1])
            elif f2c[f][1] < 0:
                f2c[f][1] = ci
            else:
                raise NonManifoldFace(f"face {key} has more than two cells")
            fl.append(f)
            sl.append(1 if a < b else -1)
        c2f.append(np.array(fl, dtype=int))
        c2s.append(np.array(sl, dtype=int))
    # a face shared by two cells must be traversed in opposite directions
    for f, (c0, c1) in enumerate(f2c):
        if c1 >= 0:
            s0 = c2s[c0][list(c2f[c0]).index(f)]
            s1 = c2s[c1][list(c2f[c1]).index(f)]
            if s0 == s1:
                raise NonManifoldFace(f"face {faces[f]} has inconsistent orientation in cells {c0}, {c1}")
    return Mesh(verts, cells, np.array(faces, dtype=int).reshape(-1, 2),
                np.array(f2c, dtype=int).reshape(-1, 2), c2f, c2s, slivers)


def _grid_mesh(xs, ys, slivers=None) -> Mesh:
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    nx, ny = len(xs), len(ys)
    X, Y = np.meshgrid(xs, ys, indexing="xy")
    verts = np.column_stack([X.ravel(), Y.ravel()])

    def vid(i, j):
        return j * nx + i

    cells = [(vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1))
             for j in range(ny - 1) for i in range(nx - 1)]
    return build_mesh(verts, cells, slivers, check_simple=False)


def gen_uniform_quad(n: int) -> Mesh:
    """n x n squares on the unit square."""
    if n < 1:
        raise MeshError("n must be >= 1")
    t = np.arange(n + 1) / n
    return _grid_mesh(t, t)


def gen_jittered_quad(n: int, amplitude: float = 0.2, seed: int | None = None) -> Mesh:
    """Uniform grid with interior vertices moved by up to ``amplitude / n``.

    ``seed`` defaults to the ``POLYVEM_SEED`` environment variable (0 if unset).
    """
    if seed is None:
        seed = int(os.environ.get("POLYVEM_SEED", "0"))
    rng = np.random.default_rng(seed)
    m = gen_uniform_quad(n)
    v = m.vertices.copy()
    inner = (v[:, 0] > 0) & (v[:, 0] < 1) & (v[:, 1] > 0) & (v[:, 1] < 1)
    v[inner] += rng.uniform(-amplitude / n, amplitude / n, size=(int(inner.sum()), 2))
    return build_mesh(v, m.cells)


def gen_cut_cartesian(n: int, eps: float, axis: str = "y") -> Mesh:
    """Uniform n x n grid whose first row (axis='y') or column (axis='x') is cut
    by the line at distance ``eps`` from the domain edge.

    The cut turns each cell of that row into a sliver of thickness ``eps`` and
    a near-full cell; ``mesh.slivers`` maps each sliver to the latter.
    """
    if not 0.0 < eps < 1.0 / n:
        raise CutOutOfRange(f"cut offset {eps} outside (0, {1.0 / n})")
    if axis not in ("x", "y"):
        raise CutOutOfRange(f"unknown cut axis {axis!r}")
    t = np.arange(n + 1) / n
    cut = np.concatenate([[0.0, eps], t[1:]])
    if axis == "y":
        xs, ys = t, cut
        # row 0 are the slivers, row 1 their neighbors
        slivers = {i: n + i for i in range(n)}
    else:
        xs, ys = cut, t
        slivers = {j * (n + 1): j * (n + 1) + 1 for j in range(n)}
    return _grid_mesh(xs, ys, slivers)


def gen_sliver_stack(count: int = 6, eps: float = 0.01) -> Mesh:
    """``count`` stacked [0,1] x [k eps, (k+1) eps] slivers; no admissible patch exists."""
    return _grid_mesh([0.0, 1.0], np.arange(count + 1) * eps)


# Fixture geometry (2-D analogues of the three pathological elements).
# notch: a V-notch from the top edge with tip at height NOTCH_CLEARANCE above
# the bottom edge, so the bottom face carries no triangle of height
# 0.1 h_F over its full length but each half does.
NOTCH_CLEARANCE = 0.04
HOURGLASS_HALF_WIDTH = 0.2
CRACK_HALF_WIDTH = 0.005
BUMP_REL_SIZE = 1e-3


def _notched(half_width: float):
    c, d = NOTCH_CLEARANCE, half_width
    verts = [(0, 0), (1, 0), (1, 1), (0.5 + d, 1), (0.5, c), (0.5 - d, 1), (0, 1),
             (1, 1.5), (0, 1.5)]
    cells = [(0, 1, 2, 3, 4, 5, 6), (5, 4, 3), (6, 5, 3, 2, 7, 8)]
    return build_mesh(verts, cells)


def _bump():
    e = BUMP_REL_SIZE * np.sqrt(2.0)
    x0 = 0.5 - e / 2
    xa, xb, xc = x0 + e / 3, x0 + 2 * e / 3, x0 + e
    y1, y2 = 1 + e / 2, 1 + e
    verts = [
        (0, 0), (1, 0), (1, 1),          # 0 1 2
        (xb, 1), (xb, y1), (xc, y1),     # 3 4 5
        (xc, y2), (x0, y2), (x0, y1),    # 6 7 8
        (xa, y1), (xa, 1), (0, 1),       # 9 10 11
        (1, 1.5), (0, 1.5),              # 12 13
    ]
    body = (0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11)
    top = (11, 10, 9, 8, 7, 6, 5, 4, 3, 2, 12, 13)
    return build_mesh(verts, [body, top])


FIXTURES = {
    "hourglass": lambda: _notched(HOURGLASS_HALF_WIDTH),
    "crack-free-cracklike": lambda: _notched(CRACK_HALF_WIDTH),
    "bump": _bump,
}


def gen_fixture(kind: str) -> Mesh:
    """Small meshes whose cell 0 realizes a named pathology.

    hourglass
        unit square with a V-notch (half-width 0.2 at the top) reaching down
        to y = 0.04; the notch and a top strip are separate cells.
    crack-free-cracklike
        the same with a slit of half-width 0.005 (the slit cell is itself a
        sliver).
    bump
        unit square carrying a mushroom-shaped bump of size 1e-3 h_K on its
        top edge; the neck is a third of the head width.
    """
    try:
        return FIXTURES[kind]()
    except KeyError:
        raise UnknownFixture(f"unknown fixture {kind!r}; known: {sorted(FIXTURES)}") from None


@dataclass(frozen=True)
class MeshFamily:
    """A refinement family: ``mesh(n)`` builds the level with n cells per side."""
    name: str
    kind: str = "uniform"
    eps: float | None = None  # fixed cut offset; None means eps = (1/n)^2
    axis: str = "y"

    def cut_offset(self, n: int) -> float:
        return self.eps if self.eps is not None else 1.0 / n ** 2

    def mesh(self, n: int) -> Mesh:
        if self.kind == "uniform":
            return gen_uniform_quad(n)
        if self.kind == "cut":
            return gen_cut_cartesian(n, self.cut_offset(n), self.axis)
        if self.kind == "jitter":
            return gen_jittered_quad(n)
        raise MeshError(f"unknown family kind {self.kind!r}")


FAMILIES = {
    "uniform": MeshFamily("uniform"),
    "cut": MeshFamily("cut", kind="cut"),
    "jitter": MeshFamily("jitter", kind="jitter"),
}


@dataclass(frozen=True)
class MergedPolygon:
    cells: tuple
    cycle: tuple            # vertex ids of the union boundary (CCW)
    coords: np.ndarray
    boundary_faces: np.ndarray   # face ids along the cycle
    boundary_signs: np.ndarray   # orientation sign of each boundary face w.r.t. the union
    faces: np.ndarray            # every face of every member cell, sorted
    interior: np.ndarray         # flag aligned with ``faces``
    area: float
    diameter: float


def merge_cells(mesh: Mesh, ids) -> MergedPolygon:
    """Union of a face-connected set of cells as a single polygon."""
    ids = sorted({int(i) for i in ids})
    if not ids:
        raise DisconnectedSelection("empty selection")
    sel = set(ids)
    # face-connectivity
    seen = {ids[0]}
    queue = deque([ids[0]])
    while queue:
        c = queue.popleft()
        for o in mesh.neighbors(c):
            if o in sel and o not in seen:
                seen.add(o)
                queue.append(o)
    if seen != sel:
        raise DisconnectedSelection(f"cells {sorted(sel - seen)} are not face-connected to {ids[0]}")

    all_faces = sorted({int(f) for c in ids for f in mesh.cell2face[c]})
    interior = np.array([mesh.face2cell[f, 0] in sel and mesh.face2cell[f, 1] in sel
                         for f in all_faces], dtype=bool)
    # directed boundary edges in member-cell orientation
    nxt: dict[int, tuple[int, int, int]] = {}
    nb = 0
    for c in ids:
        cyc = mesh.cells[c]
        for k, f in enumerate(mesh.cell2face[c]):
            o0, o1 = mesh.face2cell[f]
            if o0 in sel and o1 in sel:
                continue
            a, b = cyc[k], cyc[(k + 1) % len(cyc)]
            if a in nxt:
                raise SelectionWithHole(f"union boundary is pinched at vertex {a}")
            nxt[a] = (b, int(f), int(mesh.cell2sign[c][k]))
            nb += 1
    start = min(nxt)
    cycle, bfaces, bsigns = [], [], []
    v = start
    while True:
        cycle.append(v)
        b, f, s = nxt[v]
        bfaces.append(f)
        bsigns.append(s)
        v = b
        if v == start:
            break
        if len(cycle) > nb:
            raise SelectionWithHole("union boundary does not close")
    if len(cycle) != nb:
        raise SelectionWithHole("union boundary is not a single cycle")
    coords = mesh.vertices[cycle]
    return MergedPolygon(
        cells=tuple(ids), cycle=tuple(cycle), coords=coords,
        boundary_faces=np.array(bfaces, dtype=int), boundary_signs=np.array(bsigns, dtype=int),
        faces=np.array(all_faces, dtype=int), interior=interior,
        area=float(sum(mesh.cell_area[c] for c in ids)), diameter=pg.diameter(coords),
    )


# ---------------------------------------------------------------- text format

HEADER = "polyvem-mesh 1"


def write_mesh(mesh: Mesh, path) -> None:
    lines = [HEADER, f"# {mesh.n_cells} cells, {len(mesh.vertices)} vertices"]
    lines += [f"vertex {x:.17g} {y:.17g}" for x, y in mesh.vertices]
    lines += ["cell " + " ".join(str(i) for i in c) for c in mesh.cells]
    lines += [f"sliver {s} {p}" for s, p in sorted(mesh.slivers.items())]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_mesh(path) -> Mesh:
    verts, cells, slivers = [], [], {}
    header_seen = False
    with open(path) as fh:
        for ln, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if not header_seen:
                if line != HEADER:
                    raise ParseError(f"expected header {HEADER!r}, got {line!r}", ln)
                header_seen = True
                continue
            key, *rest = line.split()
            try:
                if key == "vertex":
                    if len(rest) != 2:
                        raise ValueError("vertex needs 2 coordinates")
                    verts.append((float(rest[0]), float(rest[1])))
                elif key == "cell":
                    if len(rest) < 3:
                        raise ValueError("cell needs >= 3 vertex indices")
                    cells.append(tuple(int(t) for t in rest))
                elif key == "sliver":
                    s, p = (int(t) for t in rest)
                    slivers[s] = p
                else:
                    raise ValueError(f"unknown record {key!r}")
            except ValueError as exc:
                raise ParseError(str(exc), ln) from None
    if not header_seen:
        raise ParseError("empty file (missing header)", 1)
    if not verts:
        raise ParseError("no vertex records")
    if not cells:
        raise ParseError("no cell records (cells required)")
    return build_mesh(verts, cells, slivers)
