import hashlib

import numpy as np
import pytest

from histoscope import IndexedMesh, load_mesh, mesh_to_ply_bytes, save_mesh
from histoscope.errors import IoFailure, MalformedPly, UnsupportedElement

from oracles import parse_ply_ref

ASCII_TRIANGLE = """ply
format ascii 1.0
comment hand written fixture
element vertex 3
property float x
property float y
property float z
property uchar red
property uchar green
property uchar blue
element face 1
property list uchar int vertex_indices
end_header
0 0 0 255 0 0
1.5 0 0 0 255 0
0 2.25 0 0 0 255
3 0 1 2
"""


def small_mesh():
    pos = np.array(
        [[0.1, 0.2, 0.3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        dtype=np.float32,
    )
    faces = np.array([[0, 1, 2], [0, 2, 3]], dtype=np.int32)
    colors = np.array(
        [[255, 0, 0], [0, 255, 0], [0, 0, 255], [10, 20, 30]], dtype=np.uint8
    )
    normals = np.array(
        [[0, 0, 1], [1, 0, 0], [0, 1, 0], [0.5773503, 0.5773503, 0.5773503]],
        dtype=np.float64,
    )
    return IndexedMesh(positions=pos, faces=faces, colors=colors, normals=normals)


class TestRoundTrip:
    def test_binary_round_trip_is_bit_exact(self, tmp_path):
        m = small_mesh()
        p = tmp_path / "m.ply"
        save_mesh(m, p)
        back = load_mesh(p)
        np.testing.assert_array_equal(back.positions, m.positions)
        np.testing.assert_array_equal(back.faces, m.faces)
        np.testing.assert_array_equal(back.colors, m.colors)
        np.testing.assert_array_equal(
            back.normals, np.asarray(m.normals).astype(np.float32)
        )

    def test_round_trip_without_normals(self, tmp_path):
        m = small_mesh()
        m = IndexedMesh(positions=m.positions, faces=m.faces, colors=m.colors)
        p = tmp_path / "m.ply"
        save_mesh(m, p)
        back = load_mesh(p)
        assert back.normals is None
        np.testing.assert_array_equal(back.positions, m.positions)

    def test_missing_colors_load_as_grey(self, tmp_path):
        m = small_mesh()
        blob = mesh_to_ply_bytes(m)
        # the writer always emits colour columns, so build a colourless file by hand
        text = (
            "ply\nformat ascii 1.0\nelement vertex 3\n"
            "property float x\nproperty float y\nproperty float z\n"
            "element face 1\nproperty list uchar int vertex_indices\n"
            "end_header\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n"
        )
        p = tmp_path / "plain.ply"
        p.write_text(text)
        back = load_mesh(p)
        assert np.all(back.colors == (200, 200, 200))
        assert blob  # writer output exercised above

    def test_larger_mesh_survives(self, tmp_path, tubes_mesh):
        p = tmp_path / "tubes.ply"
        save_mesh(tubes_mesh, p)
        back = load_mesh(p)
        np.testing.assert_array_equal(back.positions, tubes_mesh.positions)
        np.testing.assert_array_equal(back.faces, tubes_mesh.faces)

    def test_ascii_fixture_loads(self, tmp_path):
        p = tmp_path / "tri.ply"
        p.write_text(ASCII_TRIANGLE)
        m = load_mesh(p)
        assert m.vertex_count == 3
        assert m.face_count == 1
        np.testing.assert_allclose(
            m.positions, [[0, 0, 0], [1.5, 0, 0], [0, 2.25, 0]]
        )
        assert m.colors.tolist() == [[255, 0, 0], [0, 255, 0], [0, 0, 255]]
        assert m.normals is None
        assert m.faces.tolist() == [[0, 1, 2]]


class TestBytes:
    def test_writer_output_is_deterministic(self):
        m = small_mesh()
        a = mesh_to_ply_bytes(m)
        b = mesh_to_ply_bytes(m)
        assert hashlib.sha256(a).hexdigest() == hashlib.sha256(b).hexdigest()

    def test_writer_agrees_with_reference_parser(self, octa_mesh):
        blob = mesh_to_ply_bytes(octa_mesh)
        positions, normals, colors, faces = parse_ply_ref(blob)
        np.testing.assert_array_equal(
            np.array(positions, dtype=np.float32), octa_mesh.positions
        )
        np.testing.assert_array_equal(
            np.array(normals, dtype=np.float32),
            np.asarray(octa_mesh.normals).astype(np.float32),
        )
        np.testing.assert_array_equal(
            np.array(colors, dtype=np.uint8), octa_mesh.effective_colors()
        )
        assert [list(f) for f in faces] == octa_mesh.faces.tolist()

    def test_header_advertises_counts(self):
        m = small_mesh()
        head = mesh_to_ply_bytes(m).split(b"end_header")[0].decode()
        assert "element vertex 4" in head
        assert "element face 2" in head
        assert "format binary_little_endian 1.0" in head


class TestMalformed:
    def test_bad_magic(self, tmp_path):
        p = tmp_path / "bad.ply"
        p.write_bytes(b"pyl\nformat ascii 1.0\nend_header\n")
        with pytest.raises(MalformedPly):
            load_mesh(p)

    def test_missing_file(self, tmp_path):
        with pytest.raises(MalformedPly):
            load_mesh(tmp_path / "absent.ply")

    def test_truncated_vertex_block(self, tmp_path):
        blob = mesh_to_ply_bytes(small_mesh())
        head_len = blob.index(b"end_header") + len(b"end_header\n")
        p = tmp_path / "trunc.ply"
        p.write_bytes(blob[: head_len + 10])
        with pytest.raises(MalformedPly, match="truncated"):
            load_mesh(p)

    def test_truncated_face_block(self, tmp_path):
        blob = mesh_to_ply_bytes(small_mesh())
        p = tmp_path / "trunc.ply"
        p.write_bytes(blob[:-3])
        with pytest.raises(MalformedPly, match="truncated"):
            load_mesh(p)

    def test_partial_color_properties(self, tmp_path):
        text = (
            "ply\nformat ascii 1.0\nelement vertex 1\n"
            "property float x\nproperty float y\nproperty float z\n"
            "property uchar red\nproperty uchar green\n"
            "element face 0\nproperty list uchar int vertex_indices\n"
            "end_header\n0 0 0 255 0\n"
        )
        p = tmp_path / "partial.ply"
        p.write_text(text)
        with pytest.raises(MalformedPly, match="partial"):
            load_mesh(p)

    def test_quad_faces_rejected(self, tmp_path):
        text = (
            "ply\nformat ascii 1.0\nelement vertex 4\n"
            "property float x\nproperty float y\nproperty float z\n"
            "element face 1\nproperty list uchar int vertex_indices\n"
            "end_header\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n4 0 1 2 3\n"
        )
        p = tmp_path / "quad.ply"
        p.write_text(text)
        with pytest.raises(MalformedPly, match="triangular"):
            load_mesh(p)

    def test_face_index_out_of_range(self, tmp_path):
        text = (
            "ply\nformat ascii 1.0\nelement vertex 3\n"
            "property float x\nproperty float y\nproperty float z\n"
            "element face 1\nproperty list uchar int vertex_indices\n"
            "end_header\n0 0 0\n1 0 0\n0 1 0\n3 0 1 7\n"
        )
        p = tmp_path / "oob.ply"
        p.write_text(text)
        with pytest.raises(MalformedPly, match="out of range"):
            load_mesh(p)

    def test_foreign_element_rejected(self, tmp_path):
        text = (
            "ply\nformat ascii 1.0\nelement vertex 1\n"
            "property float x\nproperty float y\nproperty float z\n"
            "element edge 1\nproperty int vertex1\nproperty int vertex2\n"
            "end_header\n0 0 0\n0 0\n"
        )
        p = tmp_path / "edge.ply"
        p.write_text(text)
        with pytest.raises(UnsupportedElement):
            load_mesh(p)

    def test_big_endian_rejected(self, tmp_path):
        p = tmp_path / "be.ply"
        p.write_bytes(
            b"ply\nformat binary_big_endian 1.0\nelement vertex 0\n"
            b"property float x\nproperty float y\nproperty float z\n"
            b"end_header\n"
        )
        with pytest.raises(MalformedPly, match="format"):
            load_mesh(p)

    def test_save_into_missing_directory(self, tmp_path):
        with pytest.raises(IoFailure):
            save_mesh(small_mesh(), tmp_path / "nope" / "out.ply")
