"""Element admissibility: face heights, height/hourglass checks, isotropy
classification, extended-patch search and the convex-hull overlap audit.

All predicates work on a CCW vertex array; the mesh-level wrappers only
supply cell coordinates and face ids.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import polygon as pg
from .mesh import Mesh, MergedPolygon, SelectionWithHole, merge_cells
from .quadrature import DegenerateFace


class PatchSearchFailed(RuntimeError):
    def __init__(self, cells, msg=None):
        self.cells = list(cells)
        super().__init__(msg or f"no admissible extended patch for cells {self.cells}")


@dataclass(frozen=True)
class GeometryConfig:
    gamma1: float = 0.1                 # height threshold: l_F >= gamma1 h_F
    gamma2: float = 4.0                 # patch diameter: h_omega <= gamma2 h
    gamma3: float = 25.0                # convex-hull overlap bound
    chunkiness_threshold: float = 4.0   # max_F h_F / |K|^(1/2)
    max_partition: int = 4              # pieces per face in the height/hourglass checks
    hourglass_dist_factor: float = 0.2  # dist(a, P_F) >= factor h_K
    max_faces: int = 16                 # bound on n_K
    max_patch_cells: int = 4            # bound on n_omega
    apex_grid: int = 33                 # apex abscissae tried per face
    bisect_iters: int = 48

    def __post_init__(self):
        if not 0.0 < self.gamma1 <= 1.0:
            raise ValueError("gamma1 must lie in (0, 1]")
        for name in ("gamma2", "gamma3", "chunkiness_threshold", "hourglass_dist_factor"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.max_partition < 1 or self.max_faces < 3 or self.max_patch_cells < 1:
            raise ValueError("partition/face/patch caps must be positive")

    @property
    def max_depth(self) -> int:
        return int(math.floor(math.log2(self.max_partition)))


@dataclass(frozen=True)
class PieceHeight:
    a: np.ndarray
    b: np.ndarray
    delta: float
    l: float
    apex: np.ndarray

    @property
    def pyramid(self) -> np.ndarray:
        return np.array([self.a, self.b, self.apex])


@dataclass(frozen=True)
class FaceHeight:
    delta: float          # prism depth of the whole face
    l: float              # min over pieces
    apex: np.ndarray      # apex of the limiting piece
    pieces: tuple         # PieceHeight per partition piece
    h_F: float

    @property
    def partition(self) -> list[tuple[np.ndarray, np.ndarray]]:
        return [(p.a, p.b) for p in self.pieces]


def _local_frame(a, b):
    t = b - a
    L = float(np.hypot(*t))
    t = t / L
    return L, t, np.array([-t[1], t[0]])


def piece_height(poly, a, b, convex: bool | None = None, cfg: GeometryConfig | None = None) -> PieceHeight:
    """delta and a lower bound on l for the segment ab lying on the boundary of poly."""
    cfg = cfg or GeometryConfig()
    poly = np.asarray(poly, dtype=float)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    L, t, nu = _local_frame(a, b)
    if L == 0.0:
        raise DegenerateFace(f"zero-length face at {a}")
    loc = np.column_stack([(poly - a) @ t, (poly - a) @ nu])
    clip = pg.clip_halfplane(loc, np.array([-1.0, 0.0]), 0.0)
    clip = pg.clip_halfplane(clip, np.array([1.0, 0.0]), L)
    if len(clip) == 0:
        return PieceHeight(a, b, 0.0, 0.0, a.copy())
    k = int(np.argmax(clip[:, 1]))
    delta = float(clip[k, 1])
    if delta <= 0.0:
        return PieceHeight(a, b, 0.0, 0.0, a.copy())

    def to_global(xi, tau):
        return a + xi * t + tau * nu

    if convex is None:
        convex = pg.is_convex(poly)
    if convex:
        return PieceHeight(a, b, delta, delta, to_global(*clip[k]))

    def feasible(xi, tau):
        return pg.convex_in_polygon(np.array([a, b, to_global(xi, tau)]), poly)

    xis = list(np.linspace(0.0, L, cfg.apex_grid))
    xis += [float(x) for x, y in clip if 0.0 <= x <= L and y > 0.0]
    best, best_xi = 0.0, 0.5 * L
    for xi in xis:
        if best > 0.0 and not feasible(xi, best):
            continue
        if feasible(xi, delta):
            best, best_xi = delta, xi
            break
        lo, hi = best, delta
        for _ in range(cfg.bisect_iters):
            mid = 0.5 * (lo + hi)
            if mid <= 0.0:
                break
            if feasible(xi, mid):
                lo = mid
            else:
                hi = mid
            if hi - lo <= 1e-12 * delta:
                break
        if lo > best:
            best, best_xi = lo, xi
    return PieceHeight(a, b, delta, best, to_global(best_xi, best))


def face_height(poly, k: int, cfg: GeometryConfig | None = None, target: float | None = None,
                convex: bool | None = None) -> FaceHeight:
    """Height data for face ``k`` (edge from vertex k to k+1).

    Pieces failing ``target`` (default gamma1 h_F) are bisected recursively,
    at most ``log2(max_partition)`` times.
    """
    cfg = cfg or GeometryConfig()
    poly = np.asarray(poly, dtype=float)
    a, b = poly[k], poly[(k + 1) % len(poly)]
    h_F = float(np.hypot(*(b - a)))
    if h_F == 0.0:
        raise DegenerateFace(f"face {k} has zero length")
    if convex is None:
        convex = pg.is_convex(poly)
    if target is None:
        target = cfg.gamma1 * h_F

    def refine(pa, pb, depth):
        ph = piece_height(poly, pa, pb, convex, cfg)
        if ph.l >= target or depth >= cfg.max_depth:
            return [ph]
        m = 0.5 * (pa + pb)
        return refine(pa, m, depth + 1) + refine(m, pb, depth + 1)

    pieces = refine(a, b, 0)
    worst = min(pieces, key=lambda p: p.l)
    delta = pieces[0].delta if len(pieces) == 1 else piece_height(poly, a, b, convex, cfg).delta
    return FaceHeight(delta=delta, l=worst.l, apex=worst.apex, pieces=tuple(pieces), h_F=h_F)


def check_height(poly, k: int, cfg: GeometryConfig | None = None, convex: bool | None = None):
    """(ok, FaceHeight); ok iff some partition of <= max_partition pieces has
    every piece height >= gamma1 h_F."""
    cfg = cfg or GeometryConfig()
    try:
        fh = face_height(poly, k, cfg, convex=convex)
    except DegenerateFace:
        return False, None
    return fh.l >= cfg.gamma1 * fh.h_F, fh


def _rescaled(piece: PieceHeight, height: float) -> np.ndarray:
    L, t, nu = _local_frame(piece.a, piece.b)
    xi = float((piece.apex - piece.a) @ t)
    return np.array([piece.a, piece.b, piece.a + xi * t + height * nu])


def check_hourglass(poly, k: int, cfg: GeometryConfig | None = None, fh: FaceHeight | None = None,
                    convex: bool | None = None):
    """(ok, witnesses) for face ``k``.

    For every piece of the height partition look for a cell vertex (or the
    centroid) ``a`` at distance >= factor h_K from the piece pyramid such that
    conv({a} U pyramid) lies in the cell.  The full-height pyramid is tried
    first, then the pyramid rescaled to height gamma1 h_F.
    """
    cfg = cfg or GeometryConfig()
    poly = np.asarray(poly, dtype=float)
    if convex is None:
        convex = pg.is_convex(poly)
    if fh is None:
        ok, fh = check_height(poly, k, cfg, convex)
        if not ok:
            return False, []
    elif fh.l < cfg.gamma1 * fh.h_F:
        return False, []
    h_K = pg.diameter(poly)
    need = cfg.hourglass_dist_factor * h_K
    cands = [p for p in poly]
    c = pg.centroid(poly)
    if pg.point_in_polygon(c, poly):
        cands.append(c)
    witnesses = []
    for piece in fh.pieces:
        pyramids = [piece.pyramid]
        low = cfg.gamma1 * fh.h_F
        if piece.l > low:
            pyramids.append(_rescaled(piece, low))
        found = None
        for pyr in pyramids:
            for cand in cands:
                if pg.point_convex_distance(cand, pyr) < need:
                    continue
                if convex or pg.convex_in_polygon(pg.convex_hull(np.vstack([pyr, cand])), poly):
                    found = (np.asarray(cand, dtype=float), pyr)
                    break
            if found is not None:
                break
        if found is None:
            return False, witnesses
        witnesses.append(found)
    return True, witnesses


@dataclass
class FaceReport:
    index: int
    height: FaceHeight | None
    height_ok: bool
    hourglass_ok: bool
    face_id: int | None = None

    def as_dict(self) -> dict:
        fh = self.height
        return {
            "face": self.face_id if self.face_id is not None else self.index,
            "h_F": fh.h_F if fh else 0.0,
            "delta_F": fh.delta if fh else 0.0,
            "l_F": fh.l if fh else 0.0,
            "pieces": len(fh.pieces) if fh else 0,
            "height_ok": bool(self.height_ok),
            "hourglass_ok": bool(self.hourglass_ok),
        }


@dataclass
class Classification:
    isotropic: bool
    reasons: list
    chunkiness: float
    n_faces: int
    h: float
    area: float
    faces: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "classification": "isotropic" if self.isotropic else "anisotropic",
            "reasons": list(self.reasons),
            "n_K": self.n_faces,
            "h_K": self.h,
            "area": self.area,
            "chunkiness": self.chunkiness,
            "faces": [f.as_dict() for f in self.faces],
        }


def chunkiness(poly) -> float:
    """max_F h_F / |K|^(1/2)."""
    p = np.asarray(poly, dtype=float)
    hF = np.linalg.norm(np.roll(p, -1, axis=0) - p, axis=1)
    return float(hF.max() / math.sqrt(pg.area(p)))


def classify_polygon(poly, cfg: GeometryConfig | None = None, face_ids=None) -> Classification:
    cfg = cfg or GeometryConfig()
    poly = np.asarray(poly, dtype=float)
    n = len(poly)
    convex = pg.is_convex(poly)
    reasons = []
    if n > cfg.max_faces:
        reasons.append(f"n_K={n} exceeds {cfg.max_faces}")
    ch = chunkiness(poly)
    if ch > cfg.chunkiness_threshold:
        reasons.append(f"chunkiness {ch:.4g} exceeds {cfg.chunkiness_threshold}")
    faces = []
    for k in range(n):
        hok, fh = check_height(poly, k, cfg, convex)
        gok = False
        if hok:
            gok, _ = check_hourglass(poly, k, cfg, fh, convex)
        fid = None if face_ids is None else int(face_ids[k])
        faces.append(FaceReport(k, fh, hok, gok, fid))
        name = fid if fid is not None else k
        if not hok:
            reasons.append(f"face {name}: height")
        elif not gok:
            reasons.append(f"face {name}: hourglass")
    return Classification(not reasons, reasons, ch, n, pg.diameter(poly), pg.area(poly), faces)


def classify(mesh: Mesh, cell: int, cfg: GeometryConfig | None = None) -> Classification:
    return classify_polygon(mesh.cell_coords(cell), cfg, mesh.cell2face[cell])


@dataclass(frozen=True)
class Patch:
    """Extended patch omega_K of one cell.

    ``dofs`` lists every face of every member cell with the cell's own faces
    first (in cycle order); ``on_boundary`` flags faces on the union boundary.
    """
    cell: int
    members: tuple
    merged: MergedPolygon
    dofs: np.ndarray
    n_own: int
    on_boundary: np.ndarray
    isotropic: bool

    @property
    def singleton(self) -> bool:
        return len(self.members) == 1

    @property
    def h(self) -> float:
        return self.merged.diameter

    @property
    def area(self) -> float:
        return self.merged.area

    @property
    def n_dofs(self) -> int:
        return len(self.dofs)


def make_patch(mesh: Mesh, cell: int, members, isotropic: bool = True) -> Patch:
    merged = merge_cells(mesh, members)
    own = [int(f) for f in mesh.cell2face[cell]]
    rest = [int(f) for f in merged.faces if int(f) not in set(own)]
    dofs = np.array(own + rest, dtype=int)
    bset = set(int(f) for f in merged.boundary_faces)
    on_b = np.array([int(f) in bset for f in dofs], dtype=bool)
    return Patch(cell, merged.cells, merged, dofs, len(own), on_b, isotropic)


def find_patch(mesh: Mesh, cell: int, cfg: GeometryConfig | None = None,
               classification: Classification | None = None) -> Patch:
    """Greedy extended-patch search.

    Repeatedly merge the face neighbor giving the smallest merged chunkiness
    until the union classifies isotropic with diameter <= gamma2 h.
    """
    cfg = cfg or GeometryConfig()
    if classification is None:
        classification = classify(mesh, cell, cfg)
    if classification.isotropic:
        return make_patch(mesh, cell, [cell], True)
    members = {cell}
    while len(members) < cfg.max_patch_cells:
        cands = sorted({o for c in members for o in mesh.neighbors(c)} - members)
        best = None
        for o in cands:
            try:
                merged = merge_cells(mesh, members | {o})
            except SelectionWithHole:
                continue
            key = (chunkiness(merged.coords), o)
            if best is None or key < best[0]:
                best = (key, o, merged)
        if best is None:
            break
        _, o, merged = best
        members.add(o)
        if merged.diameter <= cfg.gamma2 * mesh.h and \
                classify_polygon(merged.coords, cfg, merged.boundary_faces).isotropic:
            return make_patch(mesh, cell, members, True)
    raise PatchSearchFailed([cell], f"cell {cell}: no isotropic patch with at most "
                                    f"{cfg.max_patch_cells} cells")


@dataclass
class PatchAssignment:
    patches: list            # Patch or None (failed) per cell
    classes: list            # Classification per cell
    failures: list

    @property
    def admissible(self) -> bool:
        return not self.failures

    def anisotropic(self) -> list[int]:
        return [i for i, c in enumerate(self.classes) if not c.isotropic]


def assign_patches(mesh: Mesh, cfg: GeometryConfig | None = None, strict: bool = True) -> PatchAssignment:
    cfg = cfg or GeometryConfig()
    patches, classes, failures = [], [], []
    for c in range(mesh.n_cells):
        cl = classify(mesh, c, cfg)
        classes.append(cl)
        try:
            patches.append(find_patch(mesh, c, cfg, cl))
        except PatchSearchFailed:
            patches.append(None)
            failures.append(c)
    if strict and failures:
        raise PatchSearchFailed(failures)
    return PatchAssignment(patches, classes, failures)


def singleton_patches(mesh: Mesh) -> list[Patch]:
    return [make_patch(mesh, c, [c], True) for c in range(mesh.n_cells)]


@dataclass
class OverlapAudit:
    counts: np.ndarray
    max_count: int
    ok: bool
    offenders: list

    def as_dict(self) -> dict:
        return {"max_count": self.max_count, "ok": self.ok, "offenders": self.offenders}


def audit_overlap(mesh: Mesh, patches, cfg: GeometryConfig | None = None) -> OverlapAudit:
    """Count, for each cell, the cells whose patch hulls meet its patch hull."""
    cfg = cfg or GeometryConfig()
    hulls = [pg.convex_hull(p.merged.coords) for p in patches]
    lo = np.array([hh.min(axis=0) for hh in hulls])
    hi = np.array([hh.max(axis=0) for hh in hulls])
    tol = 1e-12 * mesh.h
    counts = np.zeros(len(hulls), dtype=int)
    for i, hull in enumerate(hulls):
        near = np.flatnonzero(np.all(lo <= hi[i] + tol, axis=1) & np.all(hi >= lo[i] - tol, axis=1))
        counts[i] = sum(1 for j in near if pg.convex_polygons_intersect(hull, hulls[j], tol))
    mx = int(counts.max()) if len(counts) else 0
    offenders = [int(i) for i in np.flatnonzero(counts > cfg.gamma3)]
    return OverlapAudit(counts, mx, mx <= cfg.gamma3, offenders)


def geometry_report(mesh: Mesh, cfg: GeometryConfig | None = None) -> dict:
    """JSON-ready per-element admissibility report."""
    cfg = cfg or GeometryConfig()
    pa = assign_patches(mesh, cfg, strict=False)
    elements = []
    for c, (cl, p) in enumerate(zip(pa.classes, pa.patches)):
        rec = {"cell": c, **cl.as_dict()}
        if not cl.isotropic:
            rec["patch"] = None if p is None else {
                "members": list(p.members), "h_omega": p.h,
                "h_omega_ok": p.h <= cfg.gamma2 * mesh.h, "isotropic": p.isotropic,
                "n_dofs": p.n_dofs,
            }
        elements.append(rec)
    usable = [p if p is not None else make_patch(mesh, c, [c], False) for c, p in enumerate(pa.patches)]
    audit = audit_overlap(mesh, usable, cfg)
    return {
        "mesh": mesh.summary(),
        "config": {k: getattr(cfg, k) for k in cfg.__dataclass_fields__},
        "elements": elements,
        "patch_failures": pa.failures,
        "overlap": audit.as_dict(),
        "admissible": pa.admissible,
    }
