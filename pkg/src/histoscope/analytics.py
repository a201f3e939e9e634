"""Visual-analytics core: geodesic-bounded painting, shape diameter,
annotation markers, and the append-only edit journals.

Paint spreads over the vertex-edge graph by shortest-path distance, so it
stays on the connected structure under the tool and never jumps across
gaps the way a Euclidean sphere would. Graph distance on dense extracted
meshes approximates true surface geodesics; that approximation is
deliberate and documented here.
"""

from __future__ import annotations

import json
import math
import os
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
from scipy.sparse.csgraph import dijkstra as _dijkstra

from .errors import (
    DegenerateRange,
    MeshMismatch,
    MissingNormals,
    NoSeedVertex,
    StoreUnavailable,
    UnknownAnnotation,
)
from .mesh import IndexedMesh, VertexAdjacency, build_adjacency
from .sections import SectionStack


def utc_now() -> str:
    """RFC 3339 timestamp with explicit UTC offset."""
    return datetime.now(timezone.utc).isoformat()


def _color3(value) -> tuple:
    col = tuple(int(c) for c in value)
    if len(col) != 3 or any(not 0 <= c <= 255 for c in col):
        raise ValueError(f"color must be three channels in 0..255, got {value!r}")
    return col


def _point3(value) -> tuple:
    p = tuple(float(c) for c in value)
    if len(p) != 3:
        raise ValueError(f"expected a 3D point, got {value!r}")
    return p


@dataclass(frozen=True)
class PaintOperation:
    """One journaled paint action: sphere seed, tool radius, colour."""

    seed_point: tuple
    tool_radius_um: float
    color: tuple
    mesh_id: str = ""
    geodesic_factor: float = 1.0
    timestamp: str = ""
    author: str = ""

    def __post_init__(self):
        object.__setattr__(self, "seed_point", _point3(self.seed_point))
        object.__setattr__(self, "color", _color3(self.color))
        if self.tool_radius_um <= 0:
            raise ValueError("tool_radius_um must be > 0")
        if self.geodesic_factor <= 0:
            raise ValueError("geodesic_factor must be > 0")

    def to_record(self) -> dict:
        return {
            "type": "paint",
            "mesh_id": self.mesh_id,
            "seed_point": list(self.seed_point),
            "tool_radius_um": self.tool_radius_um,
            "geodesic_factor": self.geodesic_factor,
            "color": list(self.color),
            "timestamp": self.timestamp or utc_now(),
            "author": self.author,
        }

    @classmethod
    def from_record(cls, rec: dict) -> "PaintOperation":
        return cls(
            seed_point=tuple(rec["seed_point"]),
            tool_radius_um=float(rec["tool_radius_um"]),
            color=tuple(rec["color"]),
            mesh_id=rec.get("mesh_id", ""),
            geodesic_factor=float(rec.get("geodesic_factor", 1.0)),
            timestamp=rec.get("timestamp", ""),
            author=rec.get("author", ""),
        )


@dataclass(frozen=True)
class Annotation:
    """Persisted spherical marker with the camera pose at placement."""

    id: int
    position: tuple
    radius_um: float
    label: str
    color: tuple
    view_transform: tuple     # 4x4 nested tuple
    section_index: int
    created_at: str
    author: str = ""

    def __post_init__(self):
        object.__setattr__(self, "position", _point3(self.position))
        object.__setattr__(self, "color", _color3(self.color))
        vt = tuple(tuple(float(x) for x in row) for row in self.view_transform)
        if len(vt) != 4 or any(len(row) != 4 for row in vt):
            raise ValueError("view_transform must be a 4x4 matrix")
        object.__setattr__(self, "view_transform", vt)
        if self.radius_um <= 0:
            raise ValueError("radius_um must be > 0")

    def to_record(self) -> dict:
        return {
            "type": "annotation",
            "id": self.id,
            "position": list(self.position),
            "radius_um": self.radius_um,
            "label": self.label,
            "color": list(self.color),
            "view_transform": [list(row) for row in self.view_transform],
            "section_index": self.section_index,
            "created_at": self.created_at,
            "author": self.author,
        }

    @classmethod
    def from_record(cls, rec: dict) -> "Annotation":
        return cls(
            id=int(rec["id"]),
            position=tuple(rec["position"]),
            radius_um=float(rec["radius_um"]),
            label=rec.get("label", ""),
            color=tuple(rec["color"]),
            view_transform=tuple(tuple(row) for row in rec["view_transform"]),
            section_index=int(rec["section_index"]),
            created_at=rec.get("created_at", ""),
            author=rec.get("author", ""),
        )


@dataclass(frozen=True)
class SdfField:
    """Per-vertex local thickness in µm; 0 where no interior was hit."""

    values: np.ndarray
    rays: int
    cone_half_angle_deg: float


@dataclass(frozen=True)
class PaintResult:
    painted: np.ndarray      # sorted painted vertex indices
    colors: np.ndarray       # full replacement colour buffer
    seed_vertex: int


def nearest_vertex(m: IndexedMesh, p, max_dist_um: float):
    """Closest vertex to p within max_dist, ties to the smallest index; None if out of reach."""
    if max_dist_um <= 0:
        raise ValueError("max_dist_um must be > 0")
    if m.vertex_count == 0:
        return None
    pos = m.positions.astype(np.float64, copy=False)
    q = np.asarray(_point3(p), dtype=np.float64)
    d = pos - q
    d2 = np.einsum("ij,ij->i", d, d)
    i = int(np.argmin(d2))
    if math.sqrt(float(d2[i])) <= float(max_dist_um):
        return i
    return None


def geodesic_distances(adj: VertexAdjacency, seed: int, bound: float | None = None) -> np.ndarray:
    """Single-source shortest-path distances; inf beyond bound when given."""
    if bound is None:
        limit = np.inf
    else:
        # one ulp above the bound so distances exactly at it are still computed
        limit = np.nextafter(float(bound), np.inf)
    return _dijkstra(adj.to_csr(), directed=True, indices=seed, limit=limit)


def geodesic_paint(
    m: IndexedMesh, adj: VertexAdjacency, op: PaintOperation, journal=None
) -> PaintResult:
    """Recolour every vertex within graph distance radius*factor of the seed.

    The seed is the nearest vertex to op.seed_point within the tool radius;
    a miss raises NoSeedVertex so the UI can tell the user the sphere
    touched nothing. The input mesh is not mutated; the result carries a
    replacement colour buffer.
    """
    seed = nearest_vertex(m, op.seed_point, op.tool_radius_um)
    if seed is None:
        raise NoSeedVertex(
            f"no vertex within {op.tool_radius_um} um of {tuple(op.seed_point)}"
        )
    bound = float(op.tool_radius_um) * float(op.geodesic_factor)
    dist = geodesic_distances(adj, seed, bound)
    painted = np.nonzero(dist <= bound)[0]
    colors = m.effective_colors().copy()
    colors[painted] = np.asarray(op.color, dtype=np.uint8)
    if journal is not None:
        journal.append(op)
    return PaintResult(painted=painted, colors=colors, seed_vertex=seed)


# counter-based uniform hash: deterministic per (seed, vertex, ray) with no
# generator state, so values do not depend on evaluation order or chunking

_SM_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_SM_M1 = np.uint64(0xBF58476D1CE4E5B9)
_SM_M2 = np.uint64(0x94D049BB133111EB)


def _splitmix64(x: np.ndarray) -> np.ndarray:
    z = x + _SM_GAMMA
    z = (z ^ (z >> np.uint64(30))) * _SM_M1
    z = (z ^ (z >> np.uint64(27))) * _SM_M2
    return z ^ (z >> np.uint64(31))


def _hash_uniform(counter: np.ndarray) -> np.ndarray:
    h = _splitmix64(_splitmix64(counter))
    return (h >> np.uint64(11)).astype(np.float64) * (2.0 ** -53)


def _first_neighbors(m: IndexedMesh) -> np.ndarray:
    """Per vertex: the following corner of its lowest-index incident face, -1 if none."""
    n = m.vertex_count
    out = np.full(n, -1, dtype=np.int64)
    if m.faces.size == 0:
        return out
    f = m.faces.astype(np.int64)
    corners = np.concatenate([f[:, 0], f[:, 1], f[:, 2]])
    nxt = np.concatenate([f[:, 1], f[:, 2], f[:, 0]])
    face_ix = np.tile(np.arange(f.shape[0], dtype=np.int64), 3)
    order = np.lexsort((face_ix, corners))
    corners_s = corners[order]
    first = np.unique(corners_s, return_index=True)[1]
    out[corners_s[first]] = nxt[order][first]
    return out


def _tangent_frames(pos: np.ndarray, normals: np.ndarray, nbr: np.ndarray):
    """Orthonormal (t, b) per vertex, built from geometry so frames co-rotate
    with the mesh under rigid transforms."""
    n = pos.shape[0]
    t = np.zeros((n, 3), dtype=np.float64)
    has = nbr >= 0
    if has.any():
        edge = pos[nbr[has]] - pos[has]
        proj = edge - np.einsum("ij,ij->i", edge, normals[has])[:, None] * normals[has]
        t[has] = proj
    lens = np.linalg.norm(t, axis=1)
    bad = lens < 1e-12
    if bad.any():
        # fall back to the world axis least aligned with the normal
        axis = np.argmin(np.abs(normals[bad]), axis=1)
        fallback = np.zeros((int(bad.sum()), 3))
        fallback[np.arange(len(fallback)), axis] = 1.0
        proj = fallback - np.einsum("ij,ij->i", fallback, normals[bad])[:, None] * normals[bad]
        t[bad] = proj
        lens = np.linalg.norm(t, axis=1)
        lens[lens == 0] = 1.0
    t /= np.maximum(lens, 1e-300)[:, None]
    b = np.cross(normals, t)
    return t, b


_BARY_EPS = 1e-9
_MIN_HIT_T_UM = 1e-4  # skips self-hits on faces incident to the ray origin
# a hit only counts when its face clearly opposes the origin normal; on
# grid-symmetric meshes the dot lands on exactly 0.0 and would otherwise
# flip sign under a rigidly moved copy
_OPPOSING_MIN = 1e-3


def shape_diameter(
    m: IndexedMesh,
    rays: int = 30,
    cone_half_angle_deg: float = 30.0,
    seed: int = 0,
    chunk_rows: int = 512,
) -> SdfField:
    """Local thickness per vertex via interior ray casting.

    Rays fan out inside a cone around the inward normal; each ray reports
    the distance to its first back-facing triangle, rays whose hit does not
    clearly face back at the origin are discarded as outliers, and the
    vertex value is the median of what survives (0 when nothing does).
    Sampling is a pure function of (seed, vertex index, ray index).
    """
    if m.normals is None:
        raise MissingNormals("shape_diameter needs per-vertex normals")
    if rays < 4:
        raise ValueError("rays must be >= 4")
    if not 0.0 < cone_half_angle_deg < 90.0:
        raise ValueError("cone_half_angle_deg must be in (0, 90)")

    n = m.vertex_count
    values = np.zeros(n, dtype=np.float64)
    if n == 0 or m.faces.size == 0:
        return SdfField(values=values, rays=rays, cone_half_angle_deg=cone_half_angle_deg)

    pos = m.positions.astype(np.float64, copy=False)
    nrm = np.asarray(m.normals, dtype=np.float64)
    nlen = np.linalg.norm(nrm, axis=1)
    nlen[nlen == 0] = 1.0
    nrm = nrm / nlen[:, None]

    f = m.faces
    v0 = pos[f[:, 0]]
    e1 = pos[f[:, 1]] - v0
    e2 = pos[f[:, 2]] - v0
    face_n = np.cross(e1, e2)
    fn_len = np.linalg.norm(face_n, axis=1)
    fn_len[fn_len == 0] = 1.0
    face_n_unit = face_n / fn_len[:, None]

    # triple-product split of the intersection test: every per-pair scalar
    # becomes a (rays, 3) @ (3, faces) product against these constants
    p1 = np.cross(v0, e1)
    p2 = np.cross(v0, e2)
    c0 = np.einsum("fk,fk->f", v0, face_n)

    tang, bitang = _tangent_frames(pos, nrm, _first_neighbors(m))

    vid = np.arange(n, dtype=np.uint64)[:, None]
    rid = np.arange(rays, dtype=np.uint64)[None, :]
    stream = vid * np.uint64(2 * rays) + np.uint64(2) * rid
    salt = np.uint64((seed * 0xD1B54A32D192ED03) & 0xFFFFFFFFFFFFFFFF)
    u1 = _hash_uniform(salt + stream)
    u2 = _hash_uniform(salt + stream + np.uint64(1))

    half = math.radians(cone_half_angle_deg)
    theta = half * np.sqrt(u1)
    phi = 2.0 * math.pi * u2
    sin_t = np.sin(theta)
    dirs = (
        np.cos(theta)[..., None] * (-nrm)[:, None, :]
        + (sin_t * np.cos(phi))[..., None] * tang[:, None, :]
        + (sin_t * np.sin(phi))[..., None] * bitang[:, None, :]
    ).reshape(-1, 3)

    origins = np.repeat(pos, rays, axis=0)
    origin_normals = np.repeat(nrm, rays, axis=0)

    total = n * rays
    n_faces = f.shape[0]
    # cap the working set: five float64 panels of (rows, faces) at a time
    rows_cap = max(16, min(int(chunk_rows), total, int(1.2e7 // max(n_faces, 1)) + 1))
    hit_t = np.full(total, np.inf, dtype=np.float64)
    fnT = face_n.T.copy()
    e1T = e1.T.copy()
    e2T = e2.T.copy()
    p1T = p1.T.copy()
    p2T = p2.T.copy()
    bf_thresh = 1e-12 * fn_len

    shape = (rows_cap, n_faces)
    B = np.empty(shape)       # d . face_n, then det, then 1/det
    U = np.empty(shape)
    V = np.empty(shape)
    T = np.empty(shape)       # scratch, then candidate t values
    OK = np.empty(shape, dtype=bool)
    SC = np.empty(shape, dtype=bool)
    brow_all = np.arange(rows_cap)

    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        for start in range(0, total, rows_cap):
            stop = min(start + rows_cap, total)
            r = stop - start
            o = origins[start:stop]
            d = dirs[start:stop]
            onrm = origin_normals[start:stop]
            cod = np.cross(o, d)
            b, u, v, t, ok, sc = B[:r], U[:r], V[:r], T[:r], OK[:r], SC[:r]

            # det = (d x e2) . e1 = -d . face_n; backface means d . n > 0
            np.matmul(d, fnT, out=b)
            np.greater(b, bf_thresh[None, :], out=ok)
            np.abs(b, out=t)
            np.greater(t, 1e-14, out=sc)
            np.logical_and(ok, sc, out=ok)
            np.negative(b, out=b)
            np.divide(1.0, b, out=b)                      # inv det, +-inf where 0

            # scalar triple products: u*det = (o x d).e2 + d.(v0 x e2),
            # v*det = -((o x d).e1 + d.(v0 x e1)), t*det = (o - v0).face_n
            np.matmul(cod, e2T, out=u)
            np.matmul(d, p2T, out=t)
            np.add(u, t, out=u)
            np.multiply(u, b, out=u)
            np.matmul(cod, e1T, out=v)
            np.matmul(d, p1T, out=t)
            np.add(v, t, out=v)
            np.negative(v, out=v)
            np.multiply(v, b, out=v)
            np.matmul(o, fnT, out=t)
            np.subtract(t, c0[None, :], out=t)
            np.multiply(t, b, out=t)

            np.greater_equal(u, -_BARY_EPS, out=sc)
            np.logical_and(ok, sc, out=ok)
            np.greater_equal(v, -_BARY_EPS, out=sc)
            np.logical_and(ok, sc, out=ok)
            np.add(u, v, out=u)
            np.less_equal(u, 1.0 + _BARY_EPS, out=sc)
            np.logical_and(ok, sc, out=ok)
            np.greater(t, _MIN_HIT_T_UM, out=sc)
            np.logical_and(ok, sc, out=ok)

            np.logical_not(ok, out=sc)
            np.copyto(t, np.inf, where=sc)
            jmin = np.argmin(t, axis=1)
            best = t[brow_all[:r], jmin]
            side_on = np.einsum("bk,bk->b", face_n_unit[jmin], onrm) > -_OPPOSING_MIN
            best = np.where(side_on, np.inf, best)
            hit_t[start:stop] = best

    per_vertex = np.sort(hit_t.reshape(n, rays), axis=1)
    k = np.isfinite(per_vertex).sum(axis=1)
    got = k > 0
    if got.any():
        lo_i = (k[got] - 1) // 2
        hi_i = k[got] // 2
        rows = np.nonzero(got)[0]
        values[got] = 0.5 * (per_vertex[rows, lo_i] + per_vertex[rows, hi_i])
    return SdfField(values=values, rays=rays, cone_half_angle_deg=cone_half_angle_deg)


def sdf_to_colors(field: SdfField, lo: float | None = None, hi: float | None = None) -> np.ndarray:
    """Red-to-green ramp over [lo, hi]; defaults to p5/p95 of positive values."""
    vals = field.values
    if lo is None or hi is None:
        positive = vals[vals > 0]
        if positive.size == 0:
            raise DegenerateRange("no positive values to derive ramp bounds from")
        p5, p95 = np.percentile(positive, [5.0, 95.0])
        lo = float(p5) if lo is None else float(lo)
        hi = float(p95) if hi is None else float(hi)
    lo = float(lo)
    hi = float(hi)
    if lo >= hi:
        raise DegenerateRange(f"need lo < hi, got lo={lo} hi={hi}")
    t = np.clip((vals - lo) / (hi - lo), 0.0, 1.0)
    out = np.zeros((vals.shape[0], 3), dtype=np.uint8)
    out[:, 0] = np.round(255.0 * (1.0 - t)).astype(np.uint8)
    out[:, 1] = np.round(255.0 * t).astype(np.uint8)
    return out


class _AppendLog:
    """Append-only JSONL file; every append is flushed and fsynced before
    returning, so an acknowledged record survives a process kill."""

    def __init__(self, path):
        self.path = Path(path)
        self._lock = threading.Lock()
        try:
            if self.path.parent != Path(""):
                self.path.parent.mkdir(parents=True, exist_ok=True)
            self._fh = open(self.path, "a", encoding="utf-8")
        except OSError as exc:
            raise StoreUnavailable(f"{path}: {exc}")

    @staticmethod
    def read_records(path) -> list:
        """Parse records, tolerating one partial trailing line (a torn write)."""
        path = Path(path)
        if not path.exists():
            return []
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise StoreUnavailable(f"{path}: {exc}")
        records = []
        lines = text.split("\n")
        for i, line in enumerate(lines):
            if not line.strip():
                continue
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError:
                if i >= len(lines) - 2:
                    break  # torn final line from a mid-write kill
                raise StoreUnavailable(f"{path}: corrupt record at line {i + 1}")
        return records

    def append_record(self, rec: dict) -> None:
        with self._lock:
            line = json.dumps(rec, separators=(",", ":"), allow_nan=False)
            try:
                self._fh.write(line + "\n")
                self._fh.flush()
                os.fsync(self._fh.fileno())
            except OSError as exc:
                raise StoreUnavailable(f"{self.path}: {exc}")

    def close(self) -> None:
        with self._lock:
            self._fh.close()


class PaintJournal(_AppendLog):
    """Durable ordered log of paint operations, one JSON object per line."""

    def __init__(self, path):
        existing = self.read_records(path)
        super().__init__(path)
        self._ops = [PaintOperation.from_record(r) for r in existing if r.get("type") == "paint"]

    @property
    def seq(self) -> int:
        return len(self._ops)

    def ops(self) -> list:
        return list(self._ops)

    def append(self, op: PaintOperation) -> int:
        rec = op.to_record()
        self.append_record(rec)
        self._ops.append(PaintOperation.from_record(rec))
        return len(self._ops)


class AnnotationStore(_AppendLog):
    """Durable annotation log with tombstone deletes (records are kept)."""

    def __init__(self, path):
        existing = self.read_records(path)
        super().__init__(path)
        self._live: dict[int, Annotation] = {}
        self._max_id = 0
        for rec in existing:
            if rec.get("type") == "annotation":
                ann = Annotation.from_record(rec)
                self._live[ann.id] = ann
                self._max_id = max(self._max_id, ann.id)
            elif rec.get("type") == "annotation_tombstone":
                self._live.pop(int(rec["id"]), None)
                self._max_id = max(self._max_id, int(rec["id"]))

    def next_id(self) -> int:
        return self._max_id + 1

    def list(self) -> list:
        return [self._live[k] for k in sorted(self._live)]

    def add(self, ann: Annotation) -> None:
        self.append_record(ann.to_record())
        with self._lock:
            self._live[ann.id] = ann
            self._max_id = max(self._max_id, ann.id)

    def delete(self, ann_id: int) -> None:
        with self._lock:
            if ann_id not in self._live:
                raise UnknownAnnotation(f"annotation {ann_id} does not exist")
        self.append_record(
            {"type": "annotation_tombstone", "id": int(ann_id), "deleted_at": utc_now()}
        )
        with self._lock:
            self._live.pop(int(ann_id), None)


def place_annotation(
    store: AnnotationStore,
    position,
    radius_um: float,
    label: str,
    color,
    view_transform,
    stack: SectionStack,
    author: str = "",
) -> Annotation:
    """Persist a spherical marker; the containing section index is derived
    from z with the same half-open slab rule the overlay cuboid uses."""
    vt = np.asarray(view_transform, dtype=np.float64)
    if vt.shape != (4, 4):
        raise ValueError(f"view_transform must be 4x4, got {vt.shape}")
    ann = Annotation(
        id=store.next_id(),
        position=tuple(position),
        radius_um=float(radius_um),
        label=str(label),
        color=tuple(color),
        view_transform=tuple(tuple(row) for row in vt.tolist()),
        section_index=stack.section_index_for(float(position[2])),
        created_at=utc_now(),
        author=author,
    )
    store.add(ann)
    return ann


def journal_replay(mesh: IndexedMesh, journal, mesh_id: str | None = None, adj=None) -> IndexedMesh:
    """Reapply paint operations in order; deterministic for a fixed journal."""
    ops = list(journal)
    if mesh_id is not None:
        for op in ops:
            if op.mesh_id != mesh_id:
                raise MeshMismatch(f"journal entry for {op.mesh_id!r}, expected {mesh_id!r}")
    elif len({op.mesh_id for op in ops}) > 1:
        raise MeshMismatch("journal mixes operations for different meshes")
    if not ops:
        return mesh
    if adj is None:
        adj = build_adjacency(mesh)
    current = mesh
    for op in ops:
        result = geodesic_paint(current, adj, op)
        current = current.with_colors(result.colors)
    return current
