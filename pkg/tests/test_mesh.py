import numpy as np
import pytest

from conftest import UNIT_BOX, single_tet_mesh
from errors import ConfigurationError, MeshLogicError
from mesh import (PolyMesh, agglomerate_et, agglomerate_vt, apply_generator, build_box_tet_mesh, build_mesh,
                  canonical_diagonal, compute_geometry, find_replacement_centers, generate_poly_mesh, lpr_replace,
                  mesh_stats, read_poly_mesh, read_tet_mesh, validate_mesh, write_poly_mesh, write_tet_mesh)

DOUBLE_BOX = (0.0, 0.0, 0.0, 2.0, 2.0, 2.0)


def test_single_cube_kuhn_split():
    tm = build_box_tet_mesh(UNIT_BOX, 1.0)
    assert tm.n_vertices == 8
    assert tm.n_tets == 6
    assert tm.volumes().sum() == pytest.approx(1.0)
    assert np.all(tm.volumes() > 0.0)


def test_lattice_counts():
    tm = build_box_tet_mesh(UNIT_BOX, 0.5)
    assert (tm.n_vertices, tm.n_tets) == (27, 48)
    assert np.count_nonzero(~tm.boundary) == 1


@pytest.mark.parametrize('bounds, h', [
    ((0, 0, 0, 0, 1, 1), 0.5),
    (UNIT_BOX, 2.0),
    (UNIT_BOX, -0.1),
])
def test_invalid_box(bounds, h):
    with pytest.raises(ConfigurationError):
        build_box_tet_mesh(bounds, h)


def test_jitter_is_deterministic():
    a = build_box_tet_mesh(UNIT_BOX, 0.25, jitter=0.1, seed=11)
    b = build_box_tet_mesh(UNIT_BOX, 0.25, jitter=0.1, seed=11)
    np.testing.assert_array_equal(a.vertices, b.vertices)
    # boundary vertices stay on the box
    lattice = build_box_tet_mesh(UNIT_BOX, 0.25)
    np.testing.assert_array_equal(a.vertices[a.boundary], lattice.vertices[lattice.boundary])


def test_no_centers_without_interior_vertices():
    assert find_replacement_centers(build_box_tet_mesh(UNIT_BOX, 1.0)) == []


def test_single_center_in_double_box():
    assert find_replacement_centers(build_box_tet_mesh(DOUBLE_BOX, 1.0)) == [13]


def test_lpr_replace_split_distance():
    pm = PolyMesh.from_tet_mesh(build_box_tet_mesh(DOUBLE_BOX, 1.0))
    report = lpr_replace(pm, 13)
    assert report.n == 24
    assert report.d == pytest.approx(0.5)
    assert report.cells_after == report.cells_before - 24 + 25


def test_lpr_replace_rejects_boundary_vertex():
    pm = PolyMesh.from_tet_mesh(build_box_tet_mesh(DOUBLE_BOX, 1.0))
    with pytest.raises(MeshLogicError):
        lpr_replace(pm, 0)


def test_canonical_diagonal_uses_smallest_index():
    assert canonical_diagonal((5, 2, 7, 9)) == frozenset({2, 9})
    assert canonical_diagonal((2, 7, 9, 5)) == canonical_diagonal((9, 5, 2, 7))


def test_lpr_counting_identities(lpr_mesh):
    assert len(lpr_mesh.replacements) == 1
    assert lpr_mesh.n_cells == 48 + 1
    assert lpr_mesh.n_subtets == 48 + 8 * 24
    kinds = [c.kind for c in lpr_mesh.cells]
    assert kinds.count('tet') == 24
    assert kinds.count('octahedron') == 24
    assert kinds.count('central') == 1


def test_lpr_cell_shapes(lpr_mesh):
    for cell in lpr_mesh.cells:
        if cell.kind == 'octahedron':
            assert len(cell.subtets) == 8
            assert cell.n_faces == 8
        elif cell.kind == 'central':
            assert len(cell.subtets) == cell.n_faces == 24


def test_lpr_mesh_is_valid(lpr_mesh, jittered_lpr_mesh):
    assert validate_mesh(lpr_mesh) == []
    assert validate_mesh(jittered_lpr_mesh) == []
    assert lpr_mesh.cell_volumes().sum() == pytest.approx(1.0)


def test_lpr_on_larger_lattice():
    tm = build_box_tet_mesh(UNIT_BOX, 1 / 3)
    pm = generate_poly_mesh(tm)
    assert len(pm.replacements) >= 1
    assert pm.n_cells == tm.n_tets + len(pm.replacements)
    assert validate_mesh(pm) == []


def test_inverted_subtet_is_reported():
    pm = build_mesh(UNIT_BOX, 0.5, 'tets')
    pm.subtets[0, [1, 2]] = pm.subtets[0, [2, 1]]
    violations = validate_mesh(pm)
    assert [v.kind for v in violations] == ['positivity']


def test_histograms(tet_mesh, lpr_mesh):
    assert mesh_stats(tet_mesh).histogram['4'] == pytest.approx(100.0)
    stats = mesh_stats(lpr_mesh)
    assert stats.histogram['6'] == 0.0
    assert stats.histogram['8'] == pytest.approx(100.0 * 24 / 49)
    assert stats.histogram['>10'] == pytest.approx(100.0 / 49)
    assert any(line.startswith('N_e = 49') for line in stats.lines())


def test_vt_agglomerate():
    pm = agglomerate_vt(build_box_tet_mesh(DOUBLE_BOX, 1.0))
    vt = [c for c in pm.cells if c.kind == 'vt']
    assert len(vt) == 1
    assert vt[0].n_faces == 24
    assert pm.n_cells == 25
    assert validate_mesh(pm) == []


def test_et_agglomerate():
    tm = build_box_tet_mesh(DOUBLE_BOX, 1.0)
    pm = agglomerate_et(tm)
    assert any(c.kind == 'et' for c in pm.cells)
    assert pm.n_cells < tm.n_tets
    assert pm.n_subtets == tm.n_tets
    assert validate_mesh(pm) == []


def test_unknown_generator():
    with pytest.raises(ConfigurationError):
        apply_generator(build_box_tet_mesh(UNIT_BOX, 1.0), 'voronoi')


def test_reference_geometry():
    geom = compute_geometry(single_tet_mesh())
    np.testing.assert_allclose(geom.J[0], np.eye(3))
    assert geom.detJ[0] == pytest.approx(1.0)
    assert geom.volume[0] == pytest.approx(1 / 6)
    assert compute_geometry(single_tet_mesh(2.0)).detJ[0] == pytest.approx(8.0)


def test_face_normals_point_outward(lpr_mesh):
    geom = compute_geometry(lpr_mesh)
    for cid, cell in enumerate(lpr_mesh.cells):
        # closed surface: sum of area-weighted normals vanishes
        total = np.sum(geom.face_area[cid][:, None] * geom.face_normal[cid], axis=0)
        np.testing.assert_allclose(total, 0.0, atol=1e-12)


def test_boundary_tags(tet_mesh):
    tags = np.concatenate([c.neighbors[c.neighbors < 0] for c in tet_mesh.cells])
    # 6 sides x 4 squares x 2 triangles, tags 0..5 only
    assert len(tags) == 48
    assert set(-tags - 1) == set(range(6))


def test_poly_mesh_file(tmp_path, jittered_lpr_mesh):
    path = tmp_path / 'mesh.pmesh'
    write_poly_mesh(jittered_lpr_mesh, str(path))
    pm = read_poly_mesh(str(path))
    assert pm.n_cells == jittered_lpr_mesh.n_cells
    assert [c.kind for c in pm.cells] == [c.kind for c in jittered_lpr_mesh.cells]
    np.testing.assert_array_equal(pm.vertices, jittered_lpr_mesh.vertices)
    np.testing.assert_array_equal(pm.subtets, jittered_lpr_mesh.subtets)
    assert len(pm.replacements) == 1


def test_tet_mesh_file(tmp_path):
    tm = build_box_tet_mesh(UNIT_BOX, 0.5, jitter=0.05, seed=1)
    path = tmp_path / 'mesh.tet'
    write_tet_mesh(tm, str(path))
    back = read_tet_mesh(str(path), UNIT_BOX)
    np.testing.assert_array_equal(back.tets, tm.tets)
    np.testing.assert_array_equal(back.boundary, tm.boundary)
    assert validate_mesh(generate_poly_mesh(back)) == []


def test_malformed_tet_mesh(tmp_path):
    path = tmp_path / 'bad.tet'
    path.write_text("4 1\n0 0 0\n1 0 0\n")
    with pytest.raises(ConfigurationError):
        read_tet_mesh(str(path))
