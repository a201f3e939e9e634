"""Central mesh data model: indexed triangles, adjacency, components, colour.

Meshes are treated as immutable; operations that change colour return a new
IndexedMesh sharing the untouched arrays.
"""

from __future__ import annotations

import colorsys
from dataclasses import dataclass, replace

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components as _scipy_components

from .errors import PaletteTooShort

DEFAULT_COLOR = (200, 200, 200)  # neutral against light and dark backgrounds

GOLDEN_ANGLE_DEG = 137.508


@dataclass
class IndexedMesh:
    """Welded triangle mesh with optional per-vertex colour and normals.

    positions : (N, 3) float32 or float64, micrometres
    faces     : (M, 3) int32, indices into positions
    colors    : (N, 3) uint8 or None
    normals   : (N, 3) float or None, unit length
    """

    positions: np.ndarray
    faces: np.ndarray
    colors: np.ndarray | None = None
    normals: np.ndarray | None = None

    def __post_init__(self):
        p = np.asarray(self.positions)
        if p.ndim != 2 or p.shape[1] != 3:
            raise ValueError(f"positions must be (N, 3), got {p.shape}")
        if p.dtype not in (np.float32, np.float64):
            p = p.astype(np.float64)
        self.positions = p

        f = np.asarray(self.faces)
        if f.size == 0:
            f = np.zeros((0, 3), dtype=np.int32)
        if f.ndim != 2 or f.shape[1] != 3:
            raise ValueError(f"faces must be (M, 3), got {f.shape}")
        f = f.astype(np.int32, copy=False)
        if f.size:
            if f.min() < 0 or f.max() >= len(p):
                raise ValueError("face indices out of range")
            a, b, c = f[:, 0], f[:, 1], f[:, 2]
            if not ((a != b) & (b != c) & (a != c)).all():
                raise ValueError("faces with repeated indices are not allowed")
        self.faces = f

        if self.colors is not None:
            col = np.asarray(self.colors, dtype=np.uint8)
            if col.shape != (len(p), 3):
                raise ValueError(f"colors must be ({len(p)}, 3), got {col.shape}")
            self.colors = col
        if self.normals is not None:
            nrm = np.asarray(self.normals)
            if nrm.shape != p.shape:
                raise ValueError(f"normals must match positions shape, got {nrm.shape}")
            self.normals = nrm

    @property
    def vertex_count(self) -> int:
        return self.positions.shape[0]

    @property
    def face_count(self) -> int:
        return self.faces.shape[0]

    def with_colors(self, colors: np.ndarray) -> "IndexedMesh":
        return replace(self, colors=colors)

    def with_normals(self, normals: np.ndarray) -> "IndexedMesh":
        return replace(self, normals=normals)

    def effective_colors(self) -> np.ndarray:
        """Colour buffer with the documented default filled in when unset."""
        if self.colors is not None:
            return self.colors
        return np.full((self.vertex_count, 3), DEFAULT_COLOR, dtype=np.uint8)


@dataclass
class VertexAdjacency:
    """CSR neighbour lists over mesh vertices with edge lengths in µm."""

    offsets: np.ndarray    # (N+1,) int64
    neighbors: np.ndarray  # (2E,) int32
    lengths: np.ndarray    # (2E,) float64

    def __post_init__(self):
        self._csr = None

    @property
    def vertex_count(self) -> int:
        return self.offsets.shape[0] - 1

    def neighbors_of(self, i: int) -> np.ndarray:
        return self.neighbors[self.offsets[i]:self.offsets[i + 1]]

    def lengths_of(self, i: int) -> np.ndarray:
        return self.lengths[self.offsets[i]:self.offsets[i + 1]]

    def to_csr(self) -> csr_matrix:
        if self._csr is None:
            n = self.vertex_count
            self._csr = csr_matrix(
                (self.lengths, self.neighbors.astype(np.int64, copy=False), self.offsets),
                shape=(n, n),
            )
        return self._csr


@dataclass(frozen=True)
class ComponentLabeling:
    """Dense component labels, ordered by size (desc), then min vertex index."""

    labels: np.ndarray  # (N,) int32
    count: int
    sizes: np.ndarray   # (count,) int64, sizes[k] = vertex count of label k


def build_adjacency(m: IndexedMesh) -> VertexAdjacency:
    """Undirected vertex graph: union of face edges, Euclidean lengths."""
    n = m.vertex_count
    if m.faces.size == 0:
        return VertexAdjacency(
            offsets=np.zeros(n + 1, dtype=np.int64),
            neighbors=np.zeros(0, dtype=np.int32),
            lengths=np.zeros(0, dtype=np.float64),
        )

    f = m.faces.astype(np.int64)
    ea = np.concatenate([f[:, 0], f[:, 1], f[:, 2]])
    eb = np.concatenate([f[:, 1], f[:, 2], f[:, 0]])
    lo = np.minimum(ea, eb)
    hi = np.maximum(ea, eb)
    ukey = np.unique(lo * n + hi)
    ulo = ukey // n
    uhi = ukey % n

    pos = m.positions.astype(np.float64, copy=False)
    d = pos[ulo] - pos[uhi]
    ulen = np.sqrt(np.einsum("ij,ij->i", d, d))

    src = np.concatenate([ulo, uhi])
    dst = np.concatenate([uhi, ulo])
    both = np.concatenate([ulen, ulen])
    order = np.argsort(src * n + dst, kind="stable")

    counts = np.bincount(src, minlength=n)
    offsets = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=offsets[1:])
    return VertexAdjacency(
        offsets=offsets,
        neighbors=dst[order].astype(np.int32),
        lengths=both[order],
    )


def connected_components(m: IndexedMesh, adj: VertexAdjacency | None = None) -> ComponentLabeling:
    """Label vertices by connectivity over shared face edges.

    Label order is deterministic: descending component size, ties broken by
    the smallest vertex index the component contains.
    """
    n = m.vertex_count
    if n == 0:
        return ComponentLabeling(
            labels=np.zeros(0, dtype=np.int32), count=0, sizes=np.zeros(0, dtype=np.int64)
        )
    if adj is None:
        adj = build_adjacency(m)
    raw_count, raw = _scipy_components(adj.to_csr(), directed=False)
    sizes = np.bincount(raw, minlength=raw_count).astype(np.int64)
    min_vertex = np.full(raw_count, n, dtype=np.int64)
    np.minimum.at(min_vertex, raw, np.arange(n, dtype=np.int64))
    order = np.lexsort((min_vertex, -sizes))
    relabel = np.empty(raw_count, dtype=np.int32)
    relabel[order] = np.arange(raw_count, dtype=np.int32)
    return ComponentLabeling(labels=relabel[raw], count=int(raw_count), sizes=sizes[order])


def golden_angle_palette(count: int, saturation: float = 0.65, value: float = 0.95) -> np.ndarray:
    """Distinct colours: hue k*137.508 deg mod 360 at fixed saturation/value."""
    out = np.empty((count, 3), dtype=np.uint8)
    for k in range(count):
        hue = (k * GOLDEN_ANGLE_DEG) % 360.0
        r, g, b = colorsys.hsv_to_rgb(hue / 360.0, saturation, value)
        out[k] = (round(r * 255), round(g * 255), round(b * 255))
    return out


def color_components(
    m: IndexedMesh, labeling: ComponentLabeling, palette=None
) -> IndexedMesh:
    """Recolour vertices by component label. Only the colors field changes."""
    if labeling.labels.shape[0] != m.vertex_count:
        raise ValueError("labeling does not match mesh")
    if palette is None:
        table = golden_angle_palette(max(labeling.count, 1))
    else:
        table = np.asarray(palette, dtype=np.uint8).reshape(-1, 3)
        if table.shape[0] < labeling.count:
            raise PaletteTooShort(
                f"palette has {table.shape[0]} entries for {labeling.count} components"
            )
    if m.vertex_count == 0:
        return m.with_colors(np.zeros((0, 3), dtype=np.uint8))
    return m.with_colors(table[labeling.labels])
