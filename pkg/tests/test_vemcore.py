import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from polyvem import polygon as pg
from polyvem.geometry import assign_patches, make_patch
from polyvem.mesh import gen_cut_cartesian, gen_fixture, gen_uniform_quad
from polyvem.quadrature import edge_average, polygon_rule
from polyvem.vemcore import (MonomialBasis, ZeroAreaCell, cell_geometry, cell_projector,
                             consistency_matrix, elliptic_projector, local_load, local_operators,
                             patch_geometry, patch_projector_matrix, polygon_geometry,
                             stabilization_matrix_original)

SQUARE = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], float)
PENTAGON = np.array([[0, 0], [2, 0], [2.5, 1], [1, 2], [-0.5, 1]], float)


def cr_stiffness(tri):
    # oracle: integrate grad(1 - 2 lambda_i) . grad(1 - 2 lambda_j) exactly
    T = np.column_stack([np.ones(3), tri])
    G = np.linalg.inv(T)[1:].T
    return 0.5 * abs(np.linalg.det(T)) * 4 * G @ G.T


def stab_face_by_face(mesh, patch):
    # oracle: S_ij = h^-1 sum_F |F| r_F(e_i) r_F(e_j), r_F(v) = chi_F(v) - Pi_w v(m_F)
    pgeo = patch_geometry(mesh, patch)
    P = patch_projector_matrix(mesh, patch, pgeo)
    n = patch.n_dofs
    S = np.zeros((n, n))
    for k in range(patch.n_own):
        r = np.zeros(n)
        for i in range(n):
            e = np.zeros(n)
            e[i] = 1
            r[i] = e[k] - pgeo.basis.evaluate(P @ e, pgeo.midpoints[k:k + 1])[0]
        S += pgeo.lengths[k] * np.outer(r, r)
    return S / patch.h


def test_square_golden():
    gold = np.array([[1, 0, -1, 0], [0, 1, 0, -1], [-1, 0, 1, 0], [0, -1, 0, 1]], float)
    assert np.allclose(consistency_matrix(SQUARE), gold, atol=1e-14)


@given(st.lists(st.floats(-1, 1), min_size=6, max_size=6))
def test_triangle_equals_cr(xs):
    tri = np.array(xs).reshape(3, 2)
    if pg.signed_area(tri) < 0:
        tri = tri[::-1]
    if pg.area(tri) < 1e-2 or pg.diameter(tri) ** 2 / pg.area(tri) > 50:
        return
    K = cr_stiffness(tri)[np.ix_([2, 0, 1], [2, 0, 1])]
    assert np.allclose(consistency_matrix(tri), K, atol=1e-10 * np.abs(K).max())


def test_projector_gradient_matches_integral():
    # grad of Pi v equals the mean gradient: |K|^-1 int_dK v n, checked with a nonlinear v
    v = lambda x, y: np.sin(x) + x * y ** 2
    geo = polygon_geometry(PENTAGON)
    chi = np.array([edge_average(v, PENTAGON[i], PENTAGON[(i + 1) % 5], q=8) for i in range(5)])
    coef, basis = elliptic_projector(PENTAGON, chi)
    grad = basis.gradient(coef)
    exact = sum(chi[i] * geo.lengths[i] * geo.normals[i] for i in range(5)) / geo.area
    assert grad == pytest.approx(exact)
    # constant: boundary average preserved
    Pv = basis.evaluate(coef, geo.midpoints)
    assert geo.lengths @ Pv == pytest.approx(geo.lengths @ chi)


@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3))
def test_projector_reproduces_linears(a, b, c):
    geo = polygon_geometry(PENTAGON)
    chi = a + b * geo.midpoints[:, 0] + c * geo.midpoints[:, 1]
    coef = cell_projector(geo) @ chi
    assert coef == pytest.approx(geo.basis.coefficients(a, b, c), abs=1e-12)


@settings(max_examples=20)
@given(st.floats(0, 2 * np.pi), st.floats(1e-3, 1e3), st.floats(-10, 10), st.floats(-10, 10))
def test_consistency_similarity_invariant(theta, s, dx, dy):
    moved = pg.rotate(PENTAGON * s, theta) + [dx, dy]
    assert np.allclose(consistency_matrix(moved), consistency_matrix(PENTAGON), atol=1e-9)
    assert np.allclose(stabilization_matrix_original(moved), stabilization_matrix_original(PENTAGON), atol=1e-9)


def test_patch_stabilization_face_by_face():
    mesh = gen_cut_cartesian(4, 1e-2)
    pa = assign_patches(mesh)
    for c in [*mesh.slivers, 0, 9]:
        p = pa.patches[c]
        ops = local_operators(mesh, p, "patch")
        assert np.allclose(ops.S, stab_face_by_face(mesh, p), atol=1e-12)


@pytest.mark.parametrize("kind", ["patch", "original"])
def test_stabilization_kills_linears_and_is_psd(kind):
    mesh = gen_fixture("crack-free-cracklike")
    pa = assign_patches(mesh)
    for p in pa.patches:
        ops = local_operators(mesh, p, kind)
        mids = mesh.face_midpoint[ops.dofs]
        for lin in (np.ones(len(mids)), mids[:, 0], mids[:, 1]):
            assert np.abs(ops.S @ lin).max() < 1e-10
        assert np.linalg.eigvalsh(ops.S).min() > -1e-12
        assert np.allclose(ops.S, ops.S.T)


def test_patch_projector_ignores_interior_faces():
    mesh = gen_uniform_quad(2)
    p = make_patch(mesh, 0, [0, 1])
    P = patch_projector_matrix(mesh, p)
    assert np.all(P[:, ~p.on_boundary] == 0)


def test_singleton_local_matrix_kernel():
    mesh = gen_fixture("hourglass")
    for c in range(mesh.n_cells):
        ops = local_operators(mesh, make_patch(mesh, c, [c]), "patch")
        lam = np.linalg.eigvalsh(ops.Kc + ops.S)
        assert abs(lam[0]) < 1e-12 * lam[-1]
        assert lam[1] > 1e-8 * lam[-1]


def test_load_of_constant_is_area():
    mesh = gen_cut_cartesian(3, 0.05)
    pa = assign_patches(mesh)
    for p in pa.patches:
        b = local_load(mesh, p.cell, lambda x, y: np.ones_like(x), patch=p)
        assert b.sum() == pytest.approx(mesh.cell_area[p.cell])


def test_load_matches_integral_of_linear_test_function():
    mesh = gen_uniform_quad(2)
    geo = cell_geometry(mesh, 3)
    f = lambda x, y: np.exp(x - y)
    b = local_load(mesh, 3, f)
    v = geo.midpoints[:, 0] * 2 - 1  # chi of the linear 2x - 1
    pts, w = polygon_rule(mesh.cell_coords(3))
    exact = w @ (f(pts[:, 0], pts[:, 1]) * (2 * pts[:, 0] - 1))
    assert b @ v == pytest.approx(exact)


def test_monomial_basis():
    B = MonomialBasis(np.array([1.0, 2.0]), 0.5)
    coef = B.coefficients(1, 2, 3)
    pts = np.array([[0.0, 0.0], [1.0, -1.0]])
    assert B.evaluate(coef, pts) == pytest.approx(1 + 2 * pts[:, 0] + 3 * pts[:, 1])
    assert B.gradient(coef) == pytest.approx([2, 3])


def test_zero_area_rejected():
    with pytest.raises(ZeroAreaCell):
        polygon_geometry(np.array([[0, 0], [1, 0], [2, 0]], float))
