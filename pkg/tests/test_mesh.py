import numpy as np
import pytest
from hypothesis import given, strategies as st

from polyvem import mesh as M


def test_uniform_counts():
    m = M.gen_uniform_quad(4)
    assert (m.n_cells, m.n_faces, len(m.boundary_faces)) == (16, 40, 16)
    assert m.domain_area() == pytest.approx(1)
    assert m.cell_area.sum() == pytest.approx(1)


@given(st.integers(2, 6), st.floats(1e-4, 0.1))
def test_cut_mesh_invariants(n, eps):
    m = M.gen_cut_cartesian(n, eps / n)
    assert m.n_cells == n * n + n
    assert m.cell_area.sum() == pytest.approx(1)
    assert len(m.slivers) == n
    # every interior face is shared by exactly two cells with opposite orientation
    for f, (a, b) in enumerate(m.face2cell):
        if b >= 0:
            sa = m.cell2sign[a][list(m.cell2face[a]).index(f)]
            sb = m.cell2sign[b][list(m.cell2face[b]).index(f)]
            assert sa == -sb


def test_cut_axis_x():
    m = M.gen_cut_cartesian(3, 0.01, axis="x")
    s, p = next(iter(m.slivers.items()))
    assert m.cell_area[s] == pytest.approx(0.01 / 3)


def test_cut_out_of_range():
    with pytest.raises(M.CutOutOfRange):
        M.gen_cut_cartesian(4, 0.5)
    with pytest.raises(M.CutOutOfRange):
        M.gen_cut_cartesian(4, 0.0)


def test_outward_normals_sum_to_zero():
    m = M.gen_jittered_quad(5, seed=3)
    for c in range(m.n_cells):
        n = m.outward_normals(c) * m.face_length[m.cell2face[c]][:, None]
        assert np.abs(n.sum(axis=0)).max() < 1e-14


def test_jitter_seed_env(monkeypatch):
    monkeypatch.setenv("POLYVEM_SEED", "7")
    a = M.gen_jittered_quad(4)
    b = M.gen_jittered_quad(4, seed=7)
    assert np.array_equal(a.vertices, b.vertices)


@pytest.mark.parametrize("cells,err", [
    ([[0, 1, 1, 2]], M.DuplicateVertexInCell),
    ([[0, 3, 2, 1]], M.NegativeArea),
    ([[0, 1, 2, 4, 3]], M.SelfIntersectingCell),   # positive area, crossing edges
])
def test_build_mesh_rejects(cells, err):
    v = [[0, 0], [1, 0], [1, 1], [0, 1], [2 / 3, -1 / 3]]
    with pytest.raises(err):
        M.build_mesh(v, cells)


def test_non_manifold_face():
    v = [[0, 0], [1, 0], [1, 1], [0, 1], [0.5, -1], [0.5, 2]]
    with pytest.raises(M.NonManifoldFace):
        M.build_mesh(v, [[0, 1, 2, 3], [0, 4, 1], [0, 1, 5]], check_simple=False)


def test_unknown_fixture():
    with pytest.raises(M.UnknownFixture):
        M.gen_fixture("nope")


@pytest.mark.parametrize("kind", sorted(M.FIXTURES))
def test_fixtures_tile_their_domain(kind):
    m = M.gen_fixture(kind)
    assert m.cell_area.sum() == pytest.approx(m.domain_area())


def test_merge_cells():
    m = M.gen_uniform_quad(3)
    merged = M.merge_cells(m, [0, 1])
    assert merged.area == pytest.approx(2 / 9)
    assert len(merged.boundary_faces) == 6
    assert merged.interior.sum() == 1
    with pytest.raises(M.DisconnectedSelection):
        M.merge_cells(m, [0, 8])
    ring = [0, 1, 2, 3, 5, 6, 7, 8]
    with pytest.raises(M.SelectionWithHole):
        M.merge_cells(m, ring)


def test_roundtrip(tmp_path):
    m = M.gen_cut_cartesian(4, 1e-3)
    p = tmp_path / "m.txt"
    M.write_mesh(m, p)
    r = M.read_mesh(p)
    assert np.array_equal(r.vertices, m.vertices)
    assert r.slivers == m.slivers
    assert [list(c) for c in r.cells] == [list(c) for c in m.cells]


@pytest.mark.parametrize("text", ["bogus\n", "polyvem-mesh 1\ncell 0 1 2\n", "polyvem-mesh 1\nvertex 0 0\n",
                                  "polyvem-mesh 1\nvertex 0 zero\n"])
def test_parse_errors(tmp_path, text):
    p = tmp_path / "bad.txt"
    p.write_text(text)
    with pytest.raises(M.ParseError):
        M.read_mesh(p)


def test_arrays_frozen():
    m = M.gen_uniform_quad(2)
    with pytest.raises(ValueError):
        m.vertices[0, 0] = 1.0
