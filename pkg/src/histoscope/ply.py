"""PLY mesh file I/O.

Writer emits binary little-endian PLY: per-vertex float32 x,y,z, optional
float32 nx,ny,nz, uchar red,green,blue, and uchar-counted int32 face index
lists. The byte stream is a pure function of the mesh, so identical meshes
produce identical files (service digests rely on this).

Reader accepts the writer's output plus ASCII PLY and a few common property
spellings; anything outside that subset raises MalformedPly or
UnsupportedElement.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import IoFailure, MalformedPly, UnsupportedElement
from .mesh import DEFAULT_COLOR, IndexedMesh

_SCALAR_TYPES = {
    "char": "i1", "int8": "i1",
    "uchar": "u1", "uint8": "u1",
    "short": "i2", "int16": "i2",
    "ushort": "u2", "uint16": "u2",
    "int": "i4", "int32": "i4",
    "uint": "u4", "uint32": "u4",
    "float": "f4", "float32": "f4",
    "double": "f8", "float64": "f8",
}


def mesh_to_ply_bytes(m: IndexedMesh) -> bytes:
    """Serialize as binary little-endian PLY."""
    n = m.vertex_count
    has_normals = m.normals is not None
    colors = m.effective_colors()

    lines = [
        "ply",
        "format binary_little_endian 1.0",
        "comment histoscope mesh",
        f"element vertex {n}",
        "property float x",
        "property float y",
        "property float z",
    ]
    if has_normals:
        lines += ["property float nx", "property float ny", "property float nz"]
    lines += [
        "property uchar red",
        "property uchar green",
        "property uchar blue",
        f"element face {m.face_count}",
        "property list uchar int vertex_indices",
        "end_header",
    ]
    header = ("\n".join(lines) + "\n").encode("ascii")

    fields = [("xyz", "<f4", (3,))]
    if has_normals:
        fields.append(("nrm", "<f4", (3,)))
    fields.append(("rgb", "u1", (3,)))
    vrec = np.zeros(n, dtype=np.dtype(fields))
    vrec["xyz"] = m.positions.astype("<f4", copy=False)
    if has_normals:
        vrec["nrm"] = m.normals.astype("<f4", copy=False)
    vrec["rgb"] = colors

    frec = np.zeros(m.face_count, dtype=np.dtype([("cnt", "u1"), ("idx", "<i4", (3,))]))
    frec["cnt"] = 3
    frec["idx"] = m.faces.astype("<i4", copy=False)

    return header + vrec.tobytes() + frec.tobytes()


def save_mesh(m: IndexedMesh, path) -> None:
    try:
        Path(path).write_bytes(mesh_to_ply_bytes(m))
    except OSError as exc:
        raise IoFailure(f"{path}: {exc}")


class _Element:
    def __init__(self, name: str, count: int):
        self.name = name
        self.count = count
        self.properties: list[tuple] = []  # (name, kind, ...) kind in {scalar, list}


def _parse_header(blob: bytes):
    end = blob.find(b"end_header")
    if not blob.startswith(b"ply") or end < 0:
        raise MalformedPly("missing ply magic or end_header")
    end_nl = blob.index(b"\n", end)
    header_text = blob[:end_nl].decode("ascii", errors="replace")
    body = blob[end_nl + 1:]

    fmt = None
    elements: list[_Element] = []
    for raw_line in header_text.split("\n"):
        line = raw_line.strip()
        if not line or line in ("ply", "end_header") or line.startswith("comment") or line.startswith("obj_info"):
            continue
        parts = line.split()
        if parts[0] == "format":
            if len(parts) < 2 or parts[1] not in ("ascii", "binary_little_endian"):
                raise MalformedPly(f"unsupported format {line!r}")
            fmt = parts[1]
        elif parts[0] == "element":
            if len(parts) != 3:
                raise MalformedPly(f"bad element line {line!r}")
            elements.append(_Element(parts[1], int(parts[2])))
        elif parts[0] == "property":
            if not elements:
                raise MalformedPly("property before any element")
            if parts[1] == "list":
                if len(parts) != 5:
                    raise MalformedPly(f"bad list property {line!r}")
                cnt_t, idx_t, name = parts[2], parts[3], parts[4]
                if cnt_t not in _SCALAR_TYPES or idx_t not in _SCALAR_TYPES:
                    raise MalformedPly(f"unknown list types in {line!r}")
                elements[-1].properties.append(
                    ("list", name, _SCALAR_TYPES[cnt_t], _SCALAR_TYPES[idx_t])
                )
            else:
                if len(parts) != 3 or parts[1] not in _SCALAR_TYPES:
                    raise MalformedPly(f"unknown property type in {line!r}")
                elements[-1].properties.append(("scalar", parts[2], _SCALAR_TYPES[parts[1]]))
        else:
            raise MalformedPly(f"unexpected header line {line!r}")
    if fmt is None:
        raise MalformedPly("missing format line")
    return fmt, elements, body


def _vertex_struct_dtype(props) -> np.dtype:
    fields = []
    for i, p in enumerate(props):
        if p[0] != "scalar":
            raise MalformedPly(f"list property {p[1]!r} in vertex element")
        fields.append((f"f{i}", "<" + p[2]))
    return np.dtype(fields)


_POSITION_NAMES = ("x", "y", "z")
_NORMAL_NAMES = ("nx", "ny", "nz")
_COLOR_NAMES = (("red", "green", "blue"), ("r", "g", "b"))


def _assemble_vertex_arrays(props, columns):
    """Map parsed vertex columns to positions/normals/colors by property name."""
    by_name = {p[1]: (i, p[2]) for i, p in enumerate(props)}

    def gather(names, expect, what):
        present = [n in by_name for n in names]
        if not any(present):
            return None
        if not all(present):
            raise MalformedPly(f"partial {what} properties")
        cols = []
        for n in names:
            i, code = by_name[n]
            if code not in expect:
                raise MalformedPly(f"{what} property {n!r} has unsupported type")
            cols.append(columns[i])
        return np.stack(cols, axis=1)

    pos = gather(_POSITION_NAMES, ("f4", "f8"), "position")
    if pos is None:
        raise MalformedPly("vertex element lacks x/y/z")
    nrm = gather(_NORMAL_NAMES, ("f4", "f8"), "normal")
    col = None
    for names in _COLOR_NAMES:
        col = gather(names, ("u1",), "colour")
        if col is not None:
            break
    return (
        pos.astype(np.float32),
        nrm.astype(np.float32) if nrm is not None else None,
        col.astype(np.uint8) if col is not None else None,
    )


def _parse_binary(elements, body):
    offset = 0
    vertex_data = None
    face_data = None
    for el in elements:
        if el.name == "vertex":
            dt = _vertex_struct_dtype(el.properties)
            need = dt.itemsize * el.count
            if len(body) - offset < need:
                raise MalformedPly("vertex data truncated")
            rec = np.frombuffer(body, dtype=dt, count=el.count, offset=offset)
            offset += need
            vertex_data = (el.properties, [rec[f"f{i}"] for i in range(len(el.properties))])
        elif el.name == "face":
            if len(el.properties) != 1 or el.properties[0][0] != "list":
                raise MalformedPly("face element must be a single index list")
            _, _, cnt_code, idx_code = el.properties[0]
            cnt_size = np.dtype(cnt_code).itemsize
            idx_size = np.dtype(idx_code).itemsize
            stride = cnt_size + 3 * idx_size
            need = stride * el.count
            if len(body) - offset < need:
                raise MalformedPly("face data truncated")
            raw = np.frombuffer(body, dtype=np.uint8, count=need, offset=offset)
            counts = raw.reshape(el.count, stride)[:, :cnt_size].copy().view("<" + cnt_code)[:, 0]
            if el.count and not (counts == 3).all():
                raise MalformedPly("only triangular faces are supported")
            idx = (
                raw.reshape(el.count, stride)[:, cnt_size:]
                .copy()
                .view("<" + idx_code)
                .astype(np.int64)
            )
            offset += need
            face_data = idx
        else:
            raise UnsupportedElement(f"element {el.name!r}")
    return vertex_data, face_data


def _parse_ascii(elements, body):
    tokens_by_line = [ln.split() for ln in body.decode("ascii").splitlines() if ln.strip()]
    cursor = 0
    vertex_data = None
    face_data = None
    for el in elements:
        rows = tokens_by_line[cursor:cursor + el.count]
        if len(rows) < el.count:
            raise MalformedPly(f"{el.name} data truncated")
        cursor += el.count
        if el.name == "vertex":
            n_props = len(el.properties)
            if any(p[0] != "scalar" for p in el.properties):
                raise MalformedPly("list property in vertex element")
            cols = []
            try:
                mat = [[float(tok) for tok in row[:n_props]] for row in rows]
            except ValueError as exc:
                raise MalformedPly(f"bad vertex value: {exc}")
            arr = np.array(mat, dtype=np.float64).reshape(el.count, n_props)
            for i in range(n_props):
                cols.append(arr[:, i])
            vertex_data = (el.properties, cols)
        elif el.name == "face":
            idx = []
            for row in rows:
                if not row or row[0] != "3":
                    raise MalformedPly("only triangular faces are supported")
                idx.append([int(t) for t in row[1:4]])
            face_data = np.array(idx, dtype=np.int64).reshape(el.count, 3)
        else:
            raise UnsupportedElement(f"element {el.name!r}")
    return vertex_data, face_data


def load_mesh(path) -> IndexedMesh:
    try:
        blob = Path(path).read_bytes()
    except OSError as exc:
        raise MalformedPly(f"{path}: {exc}")

    fmt, elements, body = _parse_header(blob)
    names = [el.name for el in elements]
    if "vertex" not in names:
        raise MalformedPly("no vertex element")
    for el in elements:
        if el.name not in ("vertex", "face"):
            raise UnsupportedElement(f"element {el.name!r}")

    if fmt == "binary_little_endian":
        vertex_data, face_data = _parse_binary(elements, body)
    else:
        vertex_data, face_data = _parse_ascii(elements, body)

    props, columns = vertex_data
    if fmt == "ascii":
        # ASCII columns were parsed as float64; colour columns need uint8
        cast = []
        for p, c in zip(props, columns):
            cast.append(c.astype("<" + p[2]))
        columns = cast
    positions, normals, colors = _assemble_vertex_arrays(props, columns)

    if face_data is None:
        faces = np.zeros((0, 3), dtype=np.int32)
    else:
        if face_data.size and (face_data.min() < 0 or face_data.max() >= len(positions)):
            raise MalformedPly("face index out of range")
        faces = face_data.astype(np.int32)

    if colors is None:
        colors = np.full((len(positions), 3), DEFAULT_COLOR, dtype=np.uint8)
    try:
        return IndexedMesh(positions=positions, faces=faces, colors=colors, normals=normals)
    except ValueError as exc:
        raise MalformedPly(str(exc))
