"""Isosurface extraction: volume -> triangle soup -> welded indexed mesh.

The extractor is the classic 256-case table method with vertices placed by
linear interpolation along sign-changing cell edges. Interpolated vertices
are computed once per global grid edge, so triangles that share an edge get
bitwise-identical corner coordinates and welding can never split a shared
edge. Output is deterministic for a given volume and iso value.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._mc_tables import TRI_TABLE
from .errors import DegenerateVolume
from .mesh import IndexedMesh
from .volume import Volume


@dataclass(frozen=True)
class RawTriangleSoup:
    """Unindexed triangles; shape (T, 3, 3), coordinates in micrometres."""

    triangles: np.ndarray

    def __post_init__(self):
        t = self.triangles
        if t.ndim != 3 or t.shape[1:] != (3, 3):
            raise ValueError(f"triangle soup must have shape (T, 3, 3), got {t.shape}")

    @property
    def count(self) -> int:
        return self.triangles.shape[0]


def default_weld_epsilon(spacing) -> float:
    """Weld tolerance far below voxel scale: merges only coincident corners."""
    return 1e-4 * float(min(spacing))


def marching_cubes(v: Volume, iso: float) -> RawTriangleSoup:
    """Extract the iso-crossing surface as a triangle soup.

    Triangles are wound so their normals point toward lower scalar values,
    i.e. out of high-intensity (stained) regions.
    """
    if not (0.0 < iso < 1.0):
        raise ValueError(f"iso must be in (0, 1) on normalized volumes, got {iso}")
    nx, ny, nz = v.dims
    if min(nx, ny, nz) < 2:
        raise DegenerateVolume(f"marching cubes needs >= 2 voxels per axis, got {(nx, ny, nz)}")

    data = v.data
    sx, sy, sz = v.spacing
    iso32 = np.float32(iso)
    # float64 image of the f32 threshold keeps interpolation consistent with
    # the crossing test below (order embeds exactly into f64)
    iso64 = float(iso32)
    below = data < iso32

    cross_x = below[:, :, :-1] != below[:, :, 1:]
    cross_y = below[:, :-1, :] != below[:, 1:, :]
    cross_z = below[:-1, :, :] != below[1:, :, :]

    n_x = int(cross_x.sum())
    n_y = int(cross_y.sum())
    n_z = int(cross_z.sum())
    total = n_x + n_y + n_z
    if total == 0:
        return RawTriangleSoup(np.zeros((0, 3, 3), dtype=np.float64))

    id_x = np.full(cross_x.shape, -1, dtype=np.int64)
    id_y = np.full(cross_y.shape, -1, dtype=np.int64)
    id_z = np.full(cross_z.shape, -1, dtype=np.int64)
    id_x[cross_x] = np.arange(n_x)
    id_y[cross_y] = np.arange(n_x, n_x + n_y)
    id_z[cross_z] = np.arange(n_x + n_y, total)

    # one interpolated position per crossing grid edge
    epos = np.empty((total, 3), dtype=np.float64)
    d64 = data.astype(np.float64, copy=False)

    ez, ey, ex = np.nonzero(cross_x)
    v0 = d64[ez, ey, ex]
    mu = (iso64 - v0) / (d64[ez, ey, ex + 1] - v0)
    epos[:n_x, 0] = (ex + mu) * sx
    epos[:n_x, 1] = ey * sy
    epos[:n_x, 2] = ez * sz

    ez, ey, ex = np.nonzero(cross_y)
    v0 = d64[ez, ey, ex]
    mu = (iso64 - v0) / (d64[ez, ey + 1, ex] - v0)
    epos[n_x:n_x + n_y, 0] = ex * sx
    epos[n_x:n_x + n_y, 1] = (ey + mu) * sy
    epos[n_x:n_x + n_y, 2] = ez * sz

    ez, ey, ex = np.nonzero(cross_z)
    v0 = d64[ez, ey, ex]
    mu = (iso64 - v0) / (d64[ez + 1, ey, ex] - v0)
    epos[n_x + n_y:, 0] = ex * sx
    epos[n_x + n_y:, 1] = ey * sy
    epos[n_x + n_y:, 2] = (ez + mu) * sz

    # 8-bit case index per cell; bit v set when that corner is below iso
    b = below.astype(np.uint8)
    cube = (
        b[:-1, :-1, :-1]
        | (b[:-1, :-1, 1:] << np.uint8(1))
        | (b[:-1, 1:, 1:] << np.uint8(2))
        | (b[:-1, 1:, :-1] << np.uint8(3))
        | (b[1:, :-1, :-1] << np.uint8(4))
        | (b[1:, :-1, 1:] << np.uint8(5))
        | (b[1:, 1:, 1:] << np.uint8(6))
        | (b[1:, 1:, :-1] << np.uint8(7))
    )

    az, ay, ax = np.nonzero((cube != 0) & (cube != 255))
    if az.size == 0:
        return RawTriangleSoup(np.zeros((0, 3, 3), dtype=np.float64))
    ci = cube[az, ay, ax]

    # global vertex id for each of the 12 local edges of each active cell
    edge_vid = np.empty((az.size, 12), dtype=np.int64)
    edge_vid[:, 0] = id_x[az, ay, ax]
    edge_vid[:, 1] = id_y[az, ay, ax + 1]
    edge_vid[:, 2] = id_x[az, ay + 1, ax]
    edge_vid[:, 3] = id_y[az, ay, ax]
    edge_vid[:, 4] = id_x[az + 1, ay, ax]
    edge_vid[:, 5] = id_y[az + 1, ay, ax + 1]
    edge_vid[:, 6] = id_x[az + 1, ay + 1, ax]
    edge_vid[:, 7] = id_y[az + 1, ay, ax]
    edge_vid[:, 8] = id_z[az, ay, ax]
    edge_vid[:, 9] = id_z[az, ay, ax + 1]
    edge_vid[:, 10] = id_z[az, ay + 1, ax + 1]
    edge_vid[:, 11] = id_z[az, ay + 1, ax]

    rows = TRI_TABLE[ci]
    valid = rows >= 0
    counts = valid.sum(axis=1)
    cell_of = np.repeat(np.arange(az.size), counts)
    corner_vids = edge_vid[cell_of, rows[valid]].reshape(-1, 3)

    soup = epos[corner_vids]
    return RawTriangleSoup(soup)


def weld(soup: RawTriangleSoup, epsilon_um: float) -> IndexedMesh:
    """Merge soup corners within epsilon (grid hashing at epsilon pitch).

    Vertices come out sorted by quantized position, which makes the result
    independent of triangle order. Faces left with a repeated index by the
    merge are dropped.
    """
    if epsilon_um < 0:
        raise ValueError("epsilon_um must be >= 0")
    pts = soup.triangles.reshape(-1, 3).astype(np.float64)
    if pts.shape[0] == 0:
        return IndexedMesh(
            positions=np.zeros((0, 3), dtype=np.float32),
            faces=np.zeros((0, 3), dtype=np.int32),
        )

    if epsilon_um == 0:
        keys = pts + 0.0  # normalizes -0.0 so exact duplicates compare equal
    else:
        keys = np.round(pts / epsilon_um) + 0.0

    _, first_idx, inverse = np.unique(keys, axis=0, return_index=True, return_inverse=True)
    positions = pts[first_idx].astype(np.float32)
    faces = inverse.reshape(-1, 3)

    a, b, c = faces[:, 0], faces[:, 1], faces[:, 2]
    keep = (a != b) & (b != c) & (a != c)
    faces = np.ascontiguousarray(faces[keep], dtype=np.int32)
    return IndexedMesh(positions=positions, faces=faces)


def compute_normals(m: IndexedMesh) -> np.ndarray:
    """Per-vertex unit normals: area-weighted average of incident face normals.

    Vertices with a zero-area (or empty) face star get (0, 0, 1). Returned in
    float64; callers quantize on file write.
    """
    pos = m.positions.astype(np.float64, copy=False)
    n = pos.shape[0]
    acc = np.zeros((n, 3), dtype=np.float64)
    if m.faces.size:
        f = m.faces
        fn = np.cross(pos[f[:, 1]] - pos[f[:, 0]], pos[f[:, 2]] - pos[f[:, 0]])
        for k in range(3):
            np.add.at(acc, f[:, k], fn)
    norm = np.linalg.norm(acc, axis=1)
    degenerate = norm < 1e-300
    norm[degenerate] = 1.0
    out = acc / norm[:, None]
    out[degenerate] = (0.0, 0.0, 1.0)
    return out
