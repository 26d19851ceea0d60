"""Edge (Gauss-Legendre) and polygon (triangulation + Dunavant) quadrature."""
from __future__ import annotations

from functools import lru_cache

import numpy as np

from . import polygon as pg


class DegenerateFace(ValueError):
    pass


@lru_cache(maxsize=None)
def gauss_legendre(q: int):
    """Points and weights on [0, 1]; exact for degree 2q-1."""
    x, w = np.polynomial.legendre.leggauss(q)
    return 0.5 * (x + 1.0), 0.5 * w


def edge_points(a, b, q: int = 4):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    t, w = gauss_legendre(q)
    return a + t[:, None] * (b - a), w


def edge_average(f, a, b, q: int = 4) -> float:
    """(1/|F|) int_F f dS for a vectorized sampler ``f(x, y)``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.linalg.norm(b - a) == 0.0:
        raise DegenerateFace(f"zero-length edge at {a}")
    pts, w = edge_points(a, b, q)
    return float(np.dot(w, f(pts[:, 0], pts[:, 1])))


# Dunavant degree-4 rule on the reference triangle (barycentric, weights sum to 1)
_D4_A = 0.445948490915965
_D4_B = 0.091576213509771
_D4_WA = 0.223381589678011
_D4_WB = 0.109951743655322
DUNAVANT4_BARY = np.array([
    [_D4_A, _D4_A, 1 - 2 * _D4_A],
    [_D4_A, 1 - 2 * _D4_A, _D4_A],
    [1 - 2 * _D4_A, _D4_A, _D4_A],
    [_D4_B, _D4_B, 1 - 2 * _D4_B],
    [_D4_B, 1 - 2 * _D4_B, _D4_B],
    [1 - 2 * _D4_B, _D4_B, _D4_B],
])
DUNAVANT4_W = np.array([_D4_WA] * 3 + [_D4_WB] * 3)


def triangle_rule(tri):
    """Degree-4 points and weights (weights sum to the triangle area)."""
    tri = np.asarray(tri, dtype=float)
    a = 0.5 * abs(pg.orient(*tri))
    return DUNAVANT4_BARY @ tri, DUNAVANT4_W * a


def polygon_rule(poly):
    """Stack triangle rules over a triangulation of ``poly``."""
    pts, wts = [], []
    for tri in pg.triangulate(poly):
        p, w = triangle_rule(tri)
        pts.append(p)
        wts.append(w)
    return np.vstack(pts), np.concatenate(wts)


def tensor_gauss_square(f, x0, x1, y0, y1, m: int = 64, q: int = 4) -> float:
    """Composite tensor Gauss rule on a rectangle (m x m panels, q^2 points each).

    Used as an independent reference in tests.
    """
    t, w = gauss_legendre(q)
    xs = np.linspace(x0, x1, m + 1)
    ys = np.linspace(y0, y1, m + 1)
    px = (xs[:-1, None] + np.outer(np.diff(xs), t)).ravel()
    wx = np.outer(np.diff(xs), w).ravel()
    py = (ys[:-1, None] + np.outer(np.diff(ys), t)).ravel()
    wy = np.outer(np.diff(ys), w).ravel()
    X, Y = np.meshgrid(px, py, indexing="ij")
    return float(np.einsum("i,j,ij->", wx, wy, f(X, Y)))
