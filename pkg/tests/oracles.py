"""Independent reference implementations used to cross-check the library.

Everything here is deliberately written from scratch with plain Python /
struct / heapq so a bug in the library's numpy or scipy usage cannot hide
in its own oracle.
"""

from __future__ import annotations

import heapq
import math
import struct
from collections import defaultdict


def adjacency_from_faces(n_vertices, positions, faces):
    """Edge dict {vertex: [(nbr, length), ...]} from face edges, deduplicated."""
    seen = set()
    adj = {i: [] for i in range(n_vertices)}
    for a, b, c in faces:
        for u, v in ((a, b), (b, c), (c, a)):
            key = (min(u, v), max(u, v))
            if key in seen:
                continue
            seen.add(key)
            dx = positions[u][0] - positions[v][0]
            dy = positions[u][1] - positions[v][1]
            dz = positions[u][2] - positions[v][2]
            w = math.sqrt(dx * dx + dy * dy + dz * dz)
            adj[u].append((v, w))
            adj[v].append((u, w))
    return adj


def dijkstra_ref(adj, seed, bound=None):
    """Single-source shortest paths via binary heap; early stop past bound."""
    dist = {seed: 0.0}
    heap = [(0.0, seed)]
    done = set()
    while heap:
        d, u = heapq.heappop(heap)
        if u in done:
            continue
        if bound is not None and d > bound:
            break
        done.add(u)
        for v, w in adj[u]:
            nd = d + w
            if v not in dist or nd < dist[v]:
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
    if bound is not None:
        return {u: d for u, d in dist.items() if d <= bound}
    return dist


def painted_set_ref(n_vertices, positions, faces, seed, bound):
    adj = adjacency_from_faces(n_vertices, positions, faces)
    return set(dijkstra_ref(adj, seed, bound).keys())


class _UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, x):
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[rb] = ra


def components_ref(n_vertices, faces):
    """Labels ordered by descending size, ties by smallest member index."""
    uf = _UnionFind(n_vertices)
    for a, b, c in faces:
        uf.union(a, b)
        uf.union(b, c)
    groups = defaultdict(list)
    for v in range(n_vertices):
        groups[uf.find(v)].append(v)
    ordered = sorted(groups.values(), key=lambda g: (-len(g), min(g)))
    labels = [0] * n_vertices
    for k, group in enumerate(ordered):
        for v in group:
            labels[v] = k
    return labels, len(ordered), [len(g) for g in ordered]


def edge_face_counts(faces):
    """Undirected edge -> incident face count, plus directed-edge multiset."""
    undirected = defaultdict(int)
    directed = defaultdict(int)
    for a, b, c in faces:
        for u, v in ((a, b), (b, c), (c, a)):
            undirected[(min(u, v), max(u, v))] += 1
            directed[(u, v)] += 1
    return undirected, directed


def is_closed_manifold(faces):
    """Every undirected edge on exactly 2 faces, traversed in opposite
    directions (consistent orientation)."""
    undirected, directed = edge_face_counts(faces)
    if any(cnt != 2 for cnt in undirected.values()):
        return False
    return all(cnt == 1 for cnt in directed.values())


def euler_characteristic(n_vertices, faces):
    undirected, _ = edge_face_counts(faces)
    return n_vertices - len(undirected) + len(faces)


def surface_area(positions, faces):
    total = 0.0
    for a, b, c in faces:
        ax, ay, az = positions[a]
        bx, by, bz = positions[b]
        cx, cy, cz = positions[c]
        ux, uy, uz = bx - ax, by - ay, bz - az
        vx, vy, vz = cx - ax, cy - ay, cz - az
        nx = uy * vz - uz * vy
        ny = uz * vx - ux * vz
        nz = ux * vy - uy * vx
        total += 0.5 * math.sqrt(nx * nx + ny * ny + nz * nz)
    return total


def closing_ref(data3d, radius):
    """Greyscale closing with a (2r+1)^3 box and edge-clamped borders.

    data3d is a nested list [z][y][x]; returns same shape nested lists.
    """
    nz = len(data3d)
    ny = len(data3d[0])
    nx = len(data3d[0][0])

    def window_vals(src, z, y, x):
        vals = []
        for dz in range(-radius, radius + 1):
            for dy in range(-radius, radius + 1):
                for dx in range(-radius, radius + 1):
                    zz = min(max(z + dz, 0), nz - 1)
                    yy = min(max(y + dy, 0), ny - 1)
                    xx = min(max(x + dx, 0), nx - 1)
                    vals.append(src[zz][yy][xx])
        return vals

    dil = [[[max(window_vals(data3d, z, y, x)) for x in range(nx)]
            for y in range(ny)] for z in range(nz)]
    ero = [[[min(window_vals(dil, z, y, x)) for x in range(nx)]
            for y in range(ny)] for z in range(nz)]
    return ero


def section_index_ref(z, thickness, count, origin_z=0.0):
    idx = math.floor((z - origin_z) / thickness)
    return max(0, min(idx, count - 1))


def parse_ply_ref(data: bytes):
    """Minimal struct-based reader for the binary little-endian layout the
    library writes: float32 x y z [nx ny nz] uchar r g b, uchar-count faces
    of int32 triples. Returns (positions, normals|None, colors, faces)."""
    end = data.index(b"end_header\n") + len(b"end_header\n")
    header = data[:end].decode("ascii").splitlines()
    assert header[0] == "ply"
    assert "format binary_little_endian 1.0" in header
    n_vert = n_face = 0
    props = []
    current = None
    for line in header:
        parts = line.split()
        if parts[0] == "element":
            current = parts[1]
            if current == "vertex":
                n_vert = int(parts[2])
            elif current == "face":
                n_face = int(parts[2])
        elif parts[0] == "property" and current == "vertex":
            props.append(parts[2])
    has_normals = "nx" in props
    pos, nrm, col = [], [], []
    off = end
    for _ in range(n_vert):
        x, y, z = struct.unpack_from("<fff", data, off)
        off += 12
        if has_normals:
            nrm.append(struct.unpack_from("<fff", data, off))
            off += 12
        r, g, b = struct.unpack_from("<BBB", data, off)
        off += 3
        pos.append((x, y, z))
        col.append((r, g, b))
    faces = []
    for _ in range(n_face):
        (cnt,) = struct.unpack_from("<B", data, off)
        off += 1
        assert cnt == 3
        faces.append(struct.unpack_from("<iii", data, off))
        off += 12
    assert off == len(data)
    return pos, (nrm if has_normals else None), col, faces
