import numpy as np
import pytest

from fvgrad import mesh as msh
from fvgrad.mesh import BoundarySpec, MeshError


def test_unit_right_triangle_geometry():
    m = msh.build_mesh([(0, 0), (1, 0), (0, 1)], [(0, 1, 2)])
    assert m.area[0] == pytest.approx(0.5, abs=0)
    np.testing.assert_allclose(m.centroid[0], [1 / 3, 1 / 3], rtol=1e-15)


def test_two_triangles_shared_edge_normal():
    m = msh.build_mesh([(0, 0), (1, 1), (1, 0), (0, 1)],
                       [(0, 2, 1), (0, 1, 3)])
    assert m.n_iface == 1
    n = m.f_normal[0]
    edge = np.array([1.0, 1.0]) / np.sqrt(2)
    assert abs(np.dot(n, edge)) < 1e-14
    assert abs(np.hypot(*n) - 1.0) < 1e-12


def test_ccw_reorientation():
    m = msh.build_mesh([(0, 0), (1, 0), (0, 1)], [(0, 2, 1)])  # clockwise input
    p = m.nodes[m.tri[0]]
    cross = (p[1, 0] - p[0, 0]) * (p[2, 1] - p[0, 1]) - \
            (p[2, 0] - p[0, 0]) * (p[1, 1] - p[0, 1])
    assert cross > 0


def test_structured_split_counts_and_closure():
    n = 5
    m = msh.periodic_structured_mesh(n)
    assert m.n_cells == 2 * n * n
    assert m.interior_mask.all()
    # brute-force closure over every cell
    for i in range(m.n_cells):
        total = np.zeros(2)
        perim = 0.0
        for k in range(3):
            total += m.cell_n[i, k] * m.cell_slen[i, k]
            perim += m.cell_slen[i, k]
        assert np.hypot(*total) <= 1e-12 * perim


def test_degenerate_triangle_rejected():
    with pytest.raises(MeshError, match="cell"):
        msh.build_mesh([(0, 0), (1, 0), (2, 0)], [(0, 1, 2)])


def test_duplicate_triangle_rejected():
    with pytest.raises(MeshError, match="duplicate"):
        msh.build_mesh([(0, 0), (1, 0), (0, 1)], [(0, 1, 2), (1, 2, 0)])


def test_non_manifold_edge_rejected():
    nodes = [(0, 0), (1, 0), (0, 1), (0, -1), (-1, 0.5)]
    tris = [(0, 1, 2), (0, 1, 3), (0, 1, 4)]
    with pytest.raises(MeshError, match="non-manifold"):
        msh.build_mesh(nodes, tris)


def test_refine_single_triangle():
    m = msh.build_mesh([(0, 0), (1, 0), (0, 1)], [(0, 1, 2)])
    fine, pm = msh.refine_uniform(m)
    assert fine.n_cells == 4
    np.testing.assert_allclose(fine.area, m.area[0] / 4, rtol=1e-12)
    np.testing.assert_allclose(pm.child_area.sum(axis=1), pm.parent_area,
                               rtol=1e-12)


def test_refine_quadruples_and_preserves_area():
    m = msh.periodic_irregular_mesh(5, seed=2)
    fine, pm = msh.refine_uniform(m)
    assert fine.n_cells == 4 * m.n_cells
    assert abs(fine.area.sum() - m.area.sum()) <= 1e-12 * m.area.sum()
    # paper-scale arithmetic: a 2614-cell coarse mesh refines to 10456 cells
    assert 4 * 2614 == 10456


def test_refine_twice_composes_parent_maps():
    m = msh.periodic_structured_mesh(3)
    f1, pm1 = msh.refine_uniform(m)
    f2, pm2 = msh.refine_uniform(f1)
    assert f2.n_cells == 16 * m.n_cells
    # areas of the 16 descendants sum to the root area
    for root in range(m.n_cells):
        mids = pm1.children[root]
        leaves = pm2.children[mids].ravel()
        assert abs(f2.area[leaves].sum() - m.area[root]) <= 1e-12


def test_projection_constant_and_mean():
    m = msh.build_mesh([(0, 0), (1, 0), (0, 1)], [(0, 1, 2)])
    fine, pm = msh.refine_uniform(m)
    const = np.full((4, 4), 3.7)
    np.testing.assert_allclose(msh.project_fine_to_coarse(const, pm), 3.7,
                               rtol=1e-14)
    vals = np.array([[1.0], [2.0], [3.0], [4.0]])
    out = msh.project_fine_to_coarse(vals, pm)
    assert out[0, 0] == pytest.approx(2.5, rel=1e-13)


def test_projection_conserves_integral(rng):
    m = msh.periodic_irregular_mesh(6, seed=4)
    fine, pm = msh.refine_uniform(m)
    w = rng.normal(size=(fine.n_cells, 4))
    proj = msh.project_fine_to_coarse(w, pm)
    tot_fine = (fine.area[:, None] * w).sum(axis=0)
    tot_coarse = (m.area[:, None] * proj).sum(axis=0)
    np.testing.assert_allclose(tot_coarse, tot_fine, rtol=1e-13)


def test_projection_size_mismatch_rejected():
    m = msh.periodic_structured_mesh(3)
    fine, pm = msh.refine_uniform(m)
    with pytest.raises(ValueError, match="rows"):
        msh.project_fine_to_coarse(np.zeros((5, 4)), pm)


def _triforce_mesh():
    """Equilateral center triangle with its three edge reflections."""
    s = 1.0
    h = s * np.sqrt(3) / 2
    nodes = [(0, 0), (1, 0), (0.5, h),          # center (up-pointing)
             (0.5, -h), (1.5, h), (-0.5, h)]
    tris = [(0, 1, 2), (0, 3, 1), (1, 4, 2), (0, 2, 5)]
    return msh.build_mesh(nodes, tris)


def test_stencil_angles_equilateral():
    m = _triforce_mesh()
    np.testing.assert_allclose(m.angles[0], 2 * np.pi / 3, rtol=1e-12)


def test_stencil_angles_rotation_invariant():
    m = _triforce_mesh()
    th = 37 * np.pi / 180
    rot = np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
    m2 = msh.build_mesh(m.nodes @ rot.T, m.tri.copy())
    np.testing.assert_allclose(sorted(m2.angles[0]), sorted(m.angles[0]),
                               atol=1e-12)
    np.testing.assert_allclose(m2.angles[0], m.angles[0], atol=1e-12)


def test_stencil_angles_translation_invariant():
    m = _triforce_mesh()
    m2 = msh.build_mesh(m.nodes + np.array([2.3, -1.7]), m.tri.copy())
    np.testing.assert_allclose(m2.angles[0], m.angles[0], atol=1e-12)


def test_stencil_angles_match_atan2_oracle():
    m = msh.periodic_irregular_mesh(5, seed=9)
    for cell in np.where(m.interior_mask)[0][:20]:
        dirs = np.column_stack([m.nbr_dx[cell], m.nbr_dy[cell]])
        ang = np.arctan2(dirs[:, 1], dirs[:, 0]) % (2 * np.pi)
        expect = (np.roll(ang, -1) - ang) % (2 * np.pi)
        got = msh.stencil_angles(m, cell)
        np.testing.assert_allclose(got, expect, atol=1e-13)
        assert all(0 < a < 2 * np.pi for a in got)
        assert abs(sum(got) - 2 * np.pi) < 1e-10


def test_stencil_angles_boundary_cell_rejected():
    m = msh.structured_mesh(3)
    boundary = np.where(~m.interior_mask)[0]
    with pytest.raises(MeshError, match="boundary"):
        msh.stencil_angles(m, boundary[0])


def test_periodic_pairing_lengths_and_topology():
    m = msh.periodic_structured_mesh(4)
    assert m.n_ghost == 0
    wrapped = np.abs(m.f_shift).sum(axis=1) > 0
    assert wrapped.sum() == 4 + 4  # one merged face per opposite boundary pair
    # antisymmetric neighbor offsets across the periodic wrap
    for i in range(m.n_cells):
        for k in range(3):
            j = m.nbr[i, k]
            back = np.where(m.nbr[j] == i)[0]
            assert back.size >= 1
            d_ij = np.array([m.nbr_dx[i, k], m.nbr_dy[i, k]])
            d_ji = np.column_stack([m.nbr_dx[j, back], m.nbr_dy[j, back]])
            assert np.min(np.hypot(*(d_ji + d_ij).T)) < 1e-12


def test_periodic_irregular_mesh_builds():
    m = msh.periodic_irregular_mesh(6, seed=0)
    assert m.n_ghost == 0
    assert m.interior_mask.all()
    assert (m.area > 0).all()


def test_ascii_roundtrip(tmp_path):
    m = msh.structured_mesh(3, boundary_spec=BoundarySpec.uniform("slip_wall"))
    path = tmp_path / "mesh.txt"
    msh.write_mesh_ascii(m, path)
    m2 = msh.read_mesh_ascii(path)
    np.testing.assert_allclose(m2.nodes, m.nodes, rtol=0, atol=0)
    assert (m2.tri == m.tri).all()
    assert (np.sort(m2.b_tag) == np.sort(m.b_tag)).all()
    assert m2.content_hash() == m.content_hash()


def test_ascii_periodic_roundtrip(tmp_path):
    m = msh.periodic_structured_mesh(3)
    path = tmp_path / "mesh.txt"
    msh.write_mesh_ascii(m, path)
    m2 = msh.read_mesh_ascii(path)
    assert m2.n_ghost == 0
    assert m2.n_iface == m.n_iface


def test_ghost_centroids_are_mirrors():
    m = msh.structured_mesh(3, boundary_spec=BoundarySpec.uniform("slip_wall"))
    for bi in range(m.n_ghost):
        f = m.n_iface + bi
        c = m.f_left[f]
        mid, n = m.f_mid[f], m.f_normal[f]
        d = np.dot(mid - m.centroid[c], n)
        expect = m.centroid[c] + 2 * d * n
        np.testing.assert_allclose(m.ghost_centroid[bi], expect, atol=1e-14)
