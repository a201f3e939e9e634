import numpy as np
import pytest

from histoscope import (
    RawTriangleSoup,
    Volume,
    compute_normals,
    default_weld_epsilon,
    marching_cubes,
    weld,
)
from histoscope.errors import DegenerateVolume

from conftest import mesh_of, sphere_volume
from oracles import euler_characteristic, is_closed_manifold, surface_area


def octa_soup():
    vol = np.zeros((3, 3, 3), dtype=np.float32)
    vol[1, 1, 1] = 1.0
    return marching_cubes(Volume(vol, (1.0, 1.0, 1.0), provenance="t"), 0.5)


class TestMarchingCubes:
    def test_constant_volume_yields_empty_soup(self):
        vol = Volume(np.zeros((4, 4, 4), dtype=np.float32), (1, 1, 1), provenance="t")
        soup = marching_cubes(vol, 0.5)
        assert soup.count == 0
        m = weld(soup, 1e-6)
        assert m.vertex_count == 0 and m.face_count == 0

    def test_single_interior_voxel_gives_octahedron(self):
        soup = octa_soup()
        assert soup.count == 8
        m = weld(soup, 1e-6)
        assert m.vertex_count == 6
        assert m.face_count == 8
        assert euler_characteristic(m.vertex_count, m.faces.tolist()) == 2
        assert is_closed_manifold(m.faces.tolist())

    def test_sphere_area_close_to_analytic(self):
        vol = sphere_volume(dims=(48, 48, 48), radius_vox=14)
        m = mesh_of(vol)
        area = surface_area(m.positions.tolist(), m.faces.tolist())
        expected = 4.0 * np.pi * 14.0**2
        assert abs(area - expected) / expected < 0.03
        assert is_closed_manifold(m.faces.tolist())
        assert euler_characteristic(m.vertex_count, m.faces.tolist()) == 2

    def test_flat_volume_rejected(self):
        vol = Volume(np.zeros((1, 4, 4), dtype=np.float32), (1, 1, 1), provenance="t")
        with pytest.raises(DegenerateVolume):
            marching_cubes(vol, 0.5)

    def test_deterministic_output(self):
        vol = sphere_volume(dims=(24, 24, 24), radius_vox=7)
        a = marching_cubes(vol, 0.5)
        b = marching_cubes(vol, 0.5)
        np.testing.assert_array_equal(a.triangles, b.triangles)
        ma, mb = weld(a, 1e-6), weld(b, 1e-6)
        np.testing.assert_array_equal(ma.positions, mb.positions)
        np.testing.assert_array_equal(ma.faces, mb.faces)

    def test_vertices_lie_on_crossing_grid_edges(self):
        rng = np.random.default_rng(23)
        data = rng.random((6, 6, 6)).astype(np.float32)
        spacing = (1.0, 1.0, 1.0)
        vol = Volume(data, spacing, provenance="t")
        iso = 0.5
        soup = marching_cubes(vol, iso)
        pts = soup.triangles.reshape(-1, 3)
        f64 = data.astype(np.float64)
        iso64 = float(np.float32(iso))
        for p in pts[:: max(1, len(pts) // 200)]:
            frac = [abs(c - round(c)) > 1e-9 for c in p]
            assert sum(frac) == 1, f"vertex {p} not on a single grid edge"
            axis = frac.index(True)
            lo = [int(round(c)) for c in p]
            lo[axis] = int(np.floor(p[axis]))
            hi = list(lo)
            hi[axis] += 1
            f0 = f64[lo[2], lo[1], lo[0]]
            f1 = f64[hi[2], hi[1], hi[0]]
            assert (f0 < iso64) != (f1 < iso64), "edge does not straddle the iso value"
            t = (iso64 - f0) / (f1 - f0)
            assert abs((lo[axis] + t) - p[axis]) < 1e-9

    def test_orientation_points_toward_lower_values(self):
        vol = sphere_volume(dims=(32, 32, 32), radius_vox=9)
        m = mesh_of(vol)
        center = np.array([15.5, 15.5, 15.5])
        v0 = m.positions[m.faces[:, 0]].astype(np.float64)
        v1 = m.positions[m.faces[:, 1]].astype(np.float64)
        v2 = m.positions[m.faces[:, 2]].astype(np.float64)
        n = np.cross(v1 - v0, v2 - v0)
        outward = (v0 + v1 + v2) / 3.0 - center
        assert np.all(np.einsum("ij,ij->i", n, outward) > 0)

    def test_spacing_scales_coordinates(self):
        vol_iso = sphere_volume(dims=(24, 24, 24), radius_vox=7, spacing=(1, 1, 1))
        vol_aniso = sphere_volume(dims=(24, 24, 24), radius_vox=7, spacing=(2, 2, 2))
        a = mesh_of(vol_iso)
        b = mesh_of(vol_aniso)
        np.testing.assert_allclose(b.positions, a.positions * 2.0, rtol=1e-6)


class TestWeld:
    def test_nearby_shared_edge_merges(self):
        d = 1e-9
        t0 = [[0, 0, 0], [1, 0, 0], [0, 1, 0]]
        t1 = [[1 + d, 0 + d, 0], [0 + d, 1 + d, 0], [1, 1, 0]]
        soup = RawTriangleSoup(np.array([t0, t1], dtype=np.float64))
        m = weld(soup, 1e-6)
        assert m.vertex_count == 4
        assert m.face_count == 2

    def test_epsilon_zero_equals_tiny_epsilon_on_exact_duplicates(self):
        soup = octa_soup()
        m0 = weld(soup, 0.0)
        m1 = weld(soup, 1e-6)
        np.testing.assert_array_equal(m0.positions, m1.positions)
        np.testing.assert_array_equal(m0.faces, m1.faces)

    def test_octahedron_counts_and_euler(self):
        m = weld(octa_soup(), 1e-6)
        assert (m.vertex_count, m.face_count) == (6, 8)
        assert euler_characteristic(6, m.faces.tolist()) == 2

    def test_degenerate_collapsed_triangles_dropped(self):
        t0 = [[0, 0, 0], [1, 0, 0], [0, 1, 0]]
        # second corner sits within epsilon of the first, so welding collapses it
        t1 = [[0, 0, 0], [1e-3, 0, 0], [1, 0, 0]]
        soup = RawTriangleSoup(np.array([t0, t1], dtype=np.float64))
        m = weld(soup, 0.5)
        assert m.face_count == 1
        assert all(len(set(f)) == 3 for f in m.faces.tolist())

    def test_vertices_sorted_by_quantized_position(self):
        soup = octa_soup()
        m = weld(soup, 1e-6)
        eps = 1e-6
        keys = np.round(m.positions.astype(np.float64) / eps)
        order = np.lexsort((keys[:, 2], keys[:, 1], keys[:, 0]))
        np.testing.assert_array_equal(order, np.arange(m.vertex_count))

    def test_negative_epsilon_rejected(self):
        with pytest.raises(ValueError):
            weld(octa_soup(), -1.0)


class TestComputeNormals:
    def test_single_ccw_triangle_gets_plus_z(self):
        from histoscope import IndexedMesh

        m = IndexedMesh(
            positions=np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0]], dtype=np.float32),
            faces=np.array([[0, 1, 2]], dtype=np.int32),
        )
        n = compute_normals(m)
        np.testing.assert_allclose(n, [[0, 0, 1]] * 3, atol=1e-12)

    def test_sphere_normals_nearly_radial(self, sphere_mesh):
        center = np.array([31.5, 31.5, 31.5])
        radial = sphere_mesh.positions.astype(np.float64) - center
        radial /= np.linalg.norm(radial, axis=1, keepdims=True)
        n = np.asarray(sphere_mesh.normals, dtype=np.float64)
        cosang = np.einsum("ij,ij->i", n, radial)
        within_5_deg = cosang > np.cos(np.radians(5.0))
        assert within_5_deg.mean() >= 0.99

    def test_cube_corner_normal_is_diagonal(self):
        from histoscope import IndexedMesh

        # unit cube, all three faces at the origin corner split through it
        p = np.array(
            [[x, y, z] for z in (0, 1) for y in (0, 1) for x in (0, 1)],
            dtype=np.float64,
        )
        # vertex ids: x + 2y + 4z
        quads = [
            ((0, 2, 3, 1), (0, 0, -1)),   # z=0 face, outward -z
            ((4, 5, 7, 6), (0, 0, 1)),    # z=1 face, outward +z
            ((0, 1, 5, 4), (0, -1, 0)),   # y=0 face, outward -y
            ((2, 6, 7, 3), (0, 1, 0)),    # y=1 face, outward +y
            ((0, 4, 6, 2), (-1, 0, 0)),   # x=0 face, outward -x
            ((1, 3, 7, 5), (1, 0, 0)),    # x=1 face, outward +x
        ]
        faces = []
        for (a, b, c, d), _ in quads:
            # split along the a-c diagonal so corner a touches two triangles
            faces.append([a, b, c])
            faces.append([a, c, d])
        faces = np.array(faces, dtype=np.int32)
        # verify winding outward before relying on it
        for (quad, outward), k in zip(quads, range(0, 12, 2)):
            a, b, c = faces[k]
            n = np.cross(p[b] - p[a], p[c] - p[a])
            assert np.dot(n, outward) > 0, f"face {quad} wound inward"
        m = IndexedMesh(positions=p, faces=faces)
        n = compute_normals(m)
        expected = np.array([-1.0, -1.0, -1.0]) / np.sqrt(3.0)
        np.testing.assert_allclose(n[0], expected, atol=1e-12)

    def test_isolated_vertex_gets_default_direction(self):
        from histoscope import IndexedMesh

        m = IndexedMesh(
            positions=np.array(
                [[0, 0, 0], [1, 0, 0], [0, 1, 0], [5, 5, 5]], dtype=np.float32
            ),
            faces=np.array([[0, 1, 2]], dtype=np.int32),
        )
        n = compute_normals(m)
        np.testing.assert_allclose(n[3], [0, 0, 1])

    def test_unit_length(self, tubes_mesh):
        n = np.asarray(tubes_mesh.normals, dtype=np.float64)
        np.testing.assert_allclose(np.linalg.norm(n, axis=1), 1.0, atol=1e-9)


class TestClosedFieldProperty:
    def test_interior_blobs_give_closed_manifolds(self):
        from histoscope import SyntheticSpec, synth_mesh

        spec = SyntheticSpec(
            kind="spheres", count=2, radii_um=(4.0,), dims=(48, 48, 48)
        )
        m = synth_mesh(spec)
        assert is_closed_manifold(m.faces.tolist())

    def test_boundary_clipped_tubes_stay_manifold(self, tubes_mesh):
        # tubes span the grid, so their ends are open rings, never fans or fins
        from oracles import edge_face_counts

        undirected, directed = edge_face_counts(tubes_mesh.faces.tolist())
        assert all(c in (1, 2) for c in undirected.values())
        assert all(c == 1 for c in directed.values())
        boundary = sum(1 for c in undirected.values() if c == 1)
        assert boundary > 0

    def test_default_epsilon_far_below_voxel(self):
        assert default_weld_epsilon((0.5, 0.5, 7.0)) == pytest.approx(5e-5)
