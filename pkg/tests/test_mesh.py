"""Mesh builders, face extraction, refinement, and conformity checks."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dlsmaxwell.mesh import (
    EDGE_TABLE,
    bisect,
    build_faces,
    cell_diameters,
    cell_inradii,
    cell_volumes,
    l_shaped_mesh,
    load_mesh,
    make_mesh,
    mesh_size,
    save_mesh,
    uniform_refine,
    unit_cube_mesh,
    unit_square_mesh,
)


def assert_conforming(mesh):
    """Every facet is shared by at most two cells and matches vertex-wise."""
    faces = build_faces(mesh)
    n_facets = mesh.dim + 1
    count = mesh.n_cells * n_facets
    assert 2 * len(faces.interior) + len(faces.boundary) == count
    vols = cell_volumes(mesh)
    assert np.all(vols > 0.0)
    return faces


# ---------------------------------------------------------------------------
# builders


@pytest.mark.parametrize("n", [1, 3, 5])
def test_unit_square_counts(n):
    mesh = unit_square_mesh(n)
    assert mesh.n_cells == 2 * n * n
    assert mesh.n_vertices == (n + 1) ** 2
    assert cell_volumes(mesh).sum() == pytest.approx(1.0, rel=1e-14)
    assert_conforming(mesh)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_unit_cube_counts(n):
    mesh = unit_cube_mesh(n)
    assert mesh.n_cells == 6 * n ** 3
    assert mesh.n_vertices == (n + 1) ** 3
    assert cell_volumes(mesh).sum() == pytest.approx(1.0, rel=1e-13)
    assert_conforming(mesh)


def test_l_shape_counts():
    mesh = l_shaped_mesh(5)
    assert mesh.n_cells == 6 * 25
    assert cell_volumes(mesh).sum() == pytest.approx(3.0, rel=1e-13)
    # no vertex inside the removed quadrant
    inside = (mesh.vertices[:, 0] > 1e-12) & (mesh.vertices[:, 1] < -1e-12)
    assert not inside.any()
    assert_conforming(mesh)


def test_mesh_size_is_max_diameter():
    mesh = unit_square_mesh(4)
    assert mesh_size(mesh) == pytest.approx(np.sqrt(2.0) / 4.0, rel=1e-14)


def test_make_mesh_fixes_orientation():
    # cell listed clockwise; make_mesh must flip it to positive volume
    verts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    mesh = make_mesh(2, verts, np.array([[0, 2, 1]]))
    assert cell_volumes(mesh)[0] > 0.0


# ---------------------------------------------------------------------------
# faces


def test_interior_face_counts_square():
    n = 4
    mesh = unit_square_mesh(n)
    faces = build_faces(mesh)
    # grid edges: horizontal n(n+1), vertical n(n+1), diagonal n^2
    total_edges = 2 * n * (n + 1) + n * n
    boundary_edges = 4 * n
    assert len(faces.boundary) == boundary_edges
    assert len(faces.interior) == total_edges - boundary_edges


def test_boundary_normals_point_outward():
    mesh = unit_square_mesh(3)
    faces = build_faces(mesh)
    for f in faces.boundary:
        mid = mesh.vertices[np.array(f.verts)].mean(axis=0)
        centroid = mesh.vertices[mesh.cells[f.cell]].mean(axis=0)
        assert np.dot(f.normal, mid - centroid) > 0.0
        assert np.linalg.norm(f.normal) == pytest.approx(1.0, rel=1e-14)


def test_interior_normals_plus_to_minus():
    mesh = unit_cube_mesh(2)
    faces = build_faces(mesh)
    for f in faces.interior:
        cp = mesh.vertices[mesh.cells[f.plus]].mean(axis=0)
        cm = mesh.vertices[mesh.cells[f.minus]].mean(axis=0)
        assert np.dot(f.normal, cm - cp) > 0.0
        assert f.h > 0.0 and f.measure > 0.0


def test_face_h_is_diameter():
    mesh = unit_square_mesh(2)
    faces = build_faces(mesh)
    for f in faces.interior:
        a, b = mesh.vertices[np.array(f.verts)]
        assert f.h == pytest.approx(np.linalg.norm(b - a), rel=1e-14)
        assert f.measure == pytest.approx(np.linalg.norm(b - a), rel=1e-14)


def test_nonmanifold_mesh_rejected():
    # three triangles sharing one edge
    verts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [-1.0, 1.0]])
    cells = np.array([[0, 1, 2], [0, 1, 3], [0, 1, 4]])
    mesh = make_mesh(2, verts, cells)
    with pytest.raises(ValueError):
        build_faces(mesh)


# ---------------------------------------------------------------------------
# refinement


@pytest.mark.parametrize("make,factor", [(unit_square_mesh, 4), (unit_cube_mesh, 8)])
def test_uniform_refine_counts(make, factor):
    mesh = make(2)
    fine = uniform_refine(mesh)
    assert fine.n_cells == factor * mesh.n_cells
    assert cell_volumes(fine).sum() == pytest.approx(cell_volumes(mesh).sum(), rel=1e-13)
    assert_conforming(fine)


def test_refinement_edge_is_longest():
    for mesh in (unit_square_mesh(3), unit_cube_mesh(2), l_shaped_mesh(2)):
        for c in range(mesh.n_cells):
            cv = mesh.cells[c]
            best = max(
                np.linalg.norm(mesh.vertices[cv[a]] - mesh.vertices[cv[b]])
                for a, b in EDGE_TABLE[mesh.dim]
            )
            la, lb = EDGE_TABLE[mesh.dim][int(mesh.refinement_edges[c])]
            got = np.linalg.norm(mesh.vertices[cv[la]] - mesh.vertices[cv[lb]])
            assert got == pytest.approx(best, rel=1e-12)


def test_bisect_single_cell_conforms():
    mesh = unit_square_mesh(2)
    fine = bisect(mesh, [0])
    assert fine.n_cells > mesh.n_cells
    assert cell_volumes(fine).sum() == pytest.approx(1.0, rel=1e-13)
    assert_conforming(fine)


@pytest.mark.parametrize("make,gens", [(unit_square_mesh, 10), (unit_cube_mesh, 6)])
def test_bisect_cascade_shape_regular(make, gens):
    mesh = make(2)
    rng = np.random.default_rng(7)
    h0 = cell_diameters(mesh) / cell_inradii(mesh)
    worst = h0.max()
    for _ in range(gens):
        marked = rng.choice(mesh.n_cells, size=max(1, mesh.n_cells // 8), replace=False)
        mesh = bisect(mesh, marked)
        assert_conforming(mesh)
        ratio = (cell_diameters(mesh) / cell_inradii(mesh)).max()
        worst = max(worst, ratio)
    assert cell_volumes(mesh).sum() == pytest.approx(1.0, rel=1e-12)
    # longest-edge bisection keeps a uniform shape-regularity bound
    assert worst < 50.0


def test_bisect_all_cells_matches_area():
    mesh = l_shaped_mesh(2)
    fine = bisect(mesh, np.arange(mesh.n_cells))
    assert fine.n_cells >= 2 * mesh.n_cells
    assert cell_volumes(fine).sum() == pytest.approx(3.0, rel=1e-13)
    assert_conforming(fine)


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), rounds=st.integers(1, 4))
def test_bisect_random_marks_conform(seed, rounds):
    rng = np.random.default_rng(seed)
    mesh = unit_square_mesh(2)
    for _ in range(rounds):
        k = int(rng.integers(1, mesh.n_cells + 1))
        marked = rng.choice(mesh.n_cells, size=k, replace=False)
        mesh = bisect(mesh, marked)
    assert_conforming(mesh)
    assert cell_volumes(mesh).sum() == pytest.approx(1.0, rel=1e-12)


# ---------------------------------------------------------------------------
# io


def test_save_load_round_trip(tmp_path):
    mesh = bisect(l_shaped_mesh(2), [0, 5, 7])
    path = tmp_path / "mesh.txt"
    save_mesh(mesh, path)
    back = load_mesh(path)
    assert back.dim == mesh.dim
    np.testing.assert_array_equal(back.cells, mesh.cells)
    np.testing.assert_allclose(back.vertices, mesh.vertices, rtol=0, atol=0)
    header = path.read_text().splitlines()[0].split()
    assert header == [str(mesh.dim), str(mesh.n_cells), str(mesh.n_vertices)]


def test_load_rejects_truncated(tmp_path):
    mesh = unit_square_mesh(2)
    path = tmp_path / "mesh.txt"
    save_mesh(mesh, path)
    text = path.read_text().splitlines()
    (tmp_path / "bad.txt").write_text("\n".join(text[:-2]))
    with pytest.raises(ValueError):
        load_mesh(tmp_path / "bad.txt")
