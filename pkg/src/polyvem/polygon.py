"""Planar polygon primitives: measures, predicates, clipping, triangulation.

Polygons are ``(n, 2)`` float arrays of vertices in counterclockwise order.
Collinear vertices are allowed (merged patches produce them).
"""
from __future__ import annotations

import math

import numpy as np

# relative shrink applied before containment tests so that shared boundary
# pieces (a pyramid base lying on a face) do not register as crossings
SHRINK = 1e-9


def signed_area(poly) -> float:
    p = np.asarray(poly, dtype=float)
    x, y = p[:, 0], p[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def area(poly) -> float:
    return abs(signed_area(poly))


def centroid(poly) -> np.ndarray:
    p = np.asarray(poly, dtype=float)
    # shift for accuracy on far-from-origin cells
    o = p[0]
    q = p - o
    x, y = q[:, 0], q[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cr = x * yn - xn * y
    a = 0.5 * cr.sum()
    if a == 0.0:
        return p.mean(axis=0)
    cx = ((x + xn) * cr).sum() / (6.0 * a)
    cy = ((y + yn) * cr).sum() / (6.0 * a)
    return np.array([cx, cy]) + o


def diameter(poly) -> float:
    p = np.asarray(poly, dtype=float)
    d = p[:, None, :] - p[None, :, :]
    return float(np.sqrt((d ** 2).sum(-1)).max())


def perimeter(poly) -> float:
    p = np.asarray(poly, dtype=float)
    return float(np.linalg.norm(np.roll(p, -1, axis=0) - p, axis=1).sum())


def orient(a, b, c) -> float:
    """Twice the signed area of triangle abc (> 0 when counterclockwise)."""
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def is_convex(poly, tol: float = 1e-12) -> bool:
    """True for a CCW polygon with no reflex vertex (collinear vertices allowed)."""
    p = np.asarray(poly, dtype=float)
    n = len(p)
    scale = diameter(p) ** 2
    for i in range(n):
        if orient(p[i - 1], p[i], p[(i + 1) % n]) < -tol * scale:
            return False
    return True


def _on_segment(a, b, c) -> bool:
    # c collinear with ab, test bounding box
    return (min(a[0], b[0]) <= c[0] <= max(a[0], b[0])
            and min(a[1], b[1]) <= c[1] <= max(a[1], b[1]))


def segments_intersect(p1, p2, q1, q2) -> bool:
    """Closed segment intersection (touching counts)."""
    d1 = orient(q1, q2, p1)
    d2 = orient(q1, q2, p2)
    d3 = orient(p1, p2, q1)
    d4 = orient(p1, p2, q2)
    if ((d1 > 0 and d2 < 0) or (d1 < 0 and d2 > 0)) and \
            ((d3 > 0 and d4 < 0) or (d3 < 0 and d4 > 0)):
        return True
    if d1 == 0 and _on_segment(q1, q2, p1):
        return True
    if d2 == 0 and _on_segment(q1, q2, p2):
        return True
    if d3 == 0 and _on_segment(p1, p2, q1):
        return True
    if d4 == 0 and _on_segment(p1, p2, q2):
        return True
    return False


def is_simple(poly) -> bool:
    """No two non-adjacent edges meet and adjacent edges do not fold back."""
    p = np.asarray(poly, dtype=float)
    n = len(p)
    if n < 3:
        return False
    for i in range(n):
        a, b = p[i], p[(i + 1) % n]
        for j in range(i + 1, n):
            if j == i + 1 or (i == 0 and j == n - 1):
                # adjacent: only a fold-back (overlap) is illegal
                if j == i + 1:
                    c = p[(j + 1) % n]
                    if orient(a, b, c) == 0 and np.dot(b - a, c - b) < 0:
                        return False
                else:
                    c = p[n - 2]
                    if orient(p[n - 1], a, b) == 0 and np.dot(a - p[n - 1], b - a) < 0:
                        return False
                continue
            if segments_intersect(a, b, p[j], p[(j + 1) % n]):
                return False
    return True


def point_in_polygon(pt, poly) -> bool:
    """Crossing-number test; points on the boundary may go either way."""
    x, y = float(pt[0]), float(pt[1])
    p = np.asarray(poly, dtype=float)
    inside = False
    n = len(p)
    for i in range(n):
        x0, y0 = p[i]
        x1, y1 = p[(i + 1) % n]
        if (y0 > y) != (y1 > y):
            xi = x0 + (y - y0) * (x1 - x0) / (y1 - y0)
            if x < xi:
                inside = not inside
    return inside


def point_segment_distance(pt, a, b) -> float:
    pt, a, b = (np.asarray(v, dtype=float) for v in (pt, a, b))
    ab = b - a
    L2 = float(ab @ ab)
    if L2 == 0.0:
        return float(np.linalg.norm(pt - a))
    t = min(1.0, max(0.0, float((pt - a) @ ab) / L2))
    return float(np.linalg.norm(pt - (a + t * ab)))


def point_convex_distance(pt, convex) -> float:
    """Distance from a point to a closed convex CCW polygon (0 inside)."""
    c = np.asarray(convex, dtype=float)
    n = len(c)
    if all(orient(c[i], c[(i + 1) % n], pt) >= 0 for i in range(n)):
        return 0.0
    return min(point_segment_distance(pt, c[i], c[(i + 1) % n]) for i in range(n))


def shrink(poly, eta: float = SHRINK) -> np.ndarray:
    p = np.asarray(poly, dtype=float)
    c = p.mean(axis=0)
    return c + (1.0 - eta) * (p - c)


def convex_in_polygon(convex, poly, eta: float = SHRINK) -> bool:
    """Is the convex polygon ``convex`` contained in the simple polygon ``poly``?

    The convex set is shrunk by the relative factor ``eta`` first, so pieces
    of its boundary lying on ``poly``'s boundary are accepted.  After that the
    test is: one shrunk vertex inside ``poly`` and no edge of ``poly`` touching
    the shrunk boundary.
    """
    c = shrink(convex, eta)
    p = np.asarray(poly, dtype=float)
    if not point_in_polygon(c[0], p):
        return False
    nc, n = len(c), len(p)
    lo, hi = c.min(axis=0), c.max(axis=0)
    for i in range(n):
        a, b = p[i], p[(i + 1) % n]
        if max(a[0], b[0]) < lo[0] or min(a[0], b[0]) > hi[0] \
                or max(a[1], b[1]) < lo[1] or min(a[1], b[1]) > hi[1]:
            continue
        for j in range(nc):
            if segments_intersect(a, b, c[j], c[(j + 1) % nc]):
                return False
    return True


def convex_hull(points) -> np.ndarray:
    """Monotone chain hull, CCW, collinear points dropped."""
    pts = sorted({(float(x), float(y)) for x, y in np.asarray(points, dtype=float)})
    if len(pts) <= 2:
        return np.array(pts, dtype=float)

    def half(seq):
        out = []
        for q in seq:
            while len(out) >= 2 and orient(out[-2], out[-1], q) <= 0:
                out.pop()
            out.append(q)
        return out

    lower = half(pts)
    upper = half(reversed(pts))
    return np.array(lower[:-1] + upper[:-1], dtype=float)


def convex_polygons_intersect(P, Q, tol: float = 0.0) -> bool:
    """Closed convex sets intersect (separating axis test; touching counts)."""
    P = np.asarray(P, dtype=float)
    Q = np.asarray(Q, dtype=float)
    for A in (P, Q):
        n = len(A)
        if n < 2:
            continue
        for i in range(n):
            e = A[(i + 1) % n] - A[i]
            axis = np.array([e[1], -e[0]])
            pa, qa = P @ axis, Q @ axis
            gap_tol = tol * float(np.linalg.norm(axis))
            if pa.max() < qa.min() - gap_tol or qa.max() < pa.min() - gap_tol:
                return False
    return True


def clip_halfplane(poly, normal, offset) -> np.ndarray:
    """Keep the part of ``poly`` with ``normal . x <= offset`` (Sutherland-Hodgman)."""
    p = np.asarray(poly, dtype=float)
    if len(p) == 0:
        return p
    s = p @ normal - offset
    out = []
    n = len(p)
    for i in range(n):
        j = (i + 1) % n
        if s[i] <= 0:
            out.append(p[i])
        if (s[i] < 0 < s[j]) or (s[j] < 0 < s[i]):
            t = s[i] / (s[i] - s[j])
            out.append(p[i] + t * (p[j] - p[i]))
    return np.array(out, dtype=float).reshape(-1, 2)


def fan_triangles(poly):
    """Triangles of the fan from the centroid, or None if some has area <= 0."""
    p = np.asarray(poly, dtype=float)
    c = centroid(p)
    n = len(p)
    tris = []
    for i in range(n):
        a, b = p[i], p[(i + 1) % n]
        o = orient(c, a, b)
        if o < 0:
            return None
        if o > 0:
            tris.append(np.array([c, a, b]))
    return tris


def ear_clip(poly):
    """Triangulate a simple CCW polygon by ear clipping (O(n^3) worst, n is small)."""
    p = np.asarray(poly, dtype=float)
    idx = list(range(len(p)))
    tris = []
    guard = 0
    while len(idx) > 3:
        guard += 1
        if guard > 10 * len(p) ** 2:
            raise ValueError("ear clipping failed; polygon not simple?")
        m = len(idx)
        clipped = False
        for k in range(m):
            i0, i1, i2 = idx[k - 1], idx[k], idx[(k + 1) % m]
            a, b, c = p[i0], p[i1], p[i2]
            o = orient(a, b, c)
            if o == 0:
                # collinear vertex: drop it, no area lost
                idx.pop(k)
                clipped = True
                break
            if o < 0:
                continue
            ear = True
            for j in idx:
                if j in (i0, i1, i2):
                    continue
                q = p[j]
                if orient(a, b, q) >= 0 and orient(b, c, q) >= 0 and orient(c, a, q) >= 0:
                    ear = False
                    break
            if ear:
                tris.append(np.array([a, b, c]))
                idx.pop(k)
                clipped = True
                break
        if not clipped:
            raise ValueError("ear clipping failed; polygon not simple?")
    a, b, c = (p[i] for i in idx)
    if orient(a, b, c) > 0:
        tris.append(np.array([a, b, c]))
    return tris


def triangulate(poly):
    """Centroid fan when the polygon is star-shaped w.r.t. its centroid, else ear clipping."""
    tris = fan_triangles(poly)
    if tris is None:
        tris = ear_clip(poly)
    return tris


def rotate(poly, angle: float, about=(0.0, 0.0)) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    R = np.array([[c, -s], [s, c]])
    o = np.asarray(about, dtype=float)
    return (np.asarray(poly, dtype=float) - o) @ R.T + o
