"""Synthetic test-data factory: desk-scale stand-ins for vessel networks.

Fields are built analytically on voxel centres with a one-voxel smoothing
ramp, so the 0.5 isosurface tracks the intended geometry to sub-voxel
accuracy. Output is deterministic for a given seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SpecInfeasible
from .isosurface import compute_normals, default_weld_epsilon, marching_cubes, weld
from .mesh import IndexedMesh
from .volume import Volume

KINDS = ("spheres", "tubes", "branching_tree")


@dataclass(frozen=True)
class SyntheticSpec:
    kind: str
    count: int = 1
    radii_um: tuple = (5.0,)
    dims: tuple = (64, 64, 64)
    spacing: tuple = (1.0, 1.0, 1.0)
    gap_um: float = 2.0            # tubes: surface-to-surface clearance
    noise_amplitude: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.count < 1:
            raise ValueError("count must be >= 1")
        radii = tuple(float(r) for r in self.radii_um)
        if not radii or any(r <= 0 for r in radii):
            raise ValueError("radii must be positive")
        object.__setattr__(self, "radii_um", radii)
        dims = tuple(int(d) for d in self.dims)
        if len(dims) != 3 or min(dims) < 2:
            raise ValueError("dims must be three values >= 2")
        object.__setattr__(self, "dims", dims)
        spacing = tuple(float(s) for s in self.spacing)
        if len(spacing) != 3 or min(spacing) <= 0:
            raise ValueError("spacing must be three positive values")
        object.__setattr__(self, "spacing", spacing)
        if self.gap_um <= 0:
            raise ValueError("gap_um must be > 0")
        if self.noise_amplitude < 0:
            raise ValueError("noise_amplitude must be >= 0")

    def radius_of(self, i: int) -> float:
        return self.radii_um[i % len(self.radii_um)]


def _coords(spec: SyntheticSpec):
    nx, ny, nz = spec.dims
    sx, sy, sz = spec.spacing
    xs = np.arange(nx, dtype=np.float64) * sx
    ys = np.arange(ny, dtype=np.float64) * sy
    zs = np.arange(nz, dtype=np.float64) * sz
    return xs[None, None, :], ys[None, :, None], zs[:, None, None]


def _ramp(dist: np.ndarray, radius: float, width: float) -> np.ndarray:
    """0.5 exactly at dist == radius, 1 well inside, 0 beyond radius+width."""
    return np.clip(0.5 + (radius - dist) / (2.0 * width), 0.0, 1.0)


def _extent(spec: SyntheticSpec) -> np.ndarray:
    return (np.array(spec.dims, dtype=np.float64) - 1) * np.array(spec.spacing)


def _spheres_field(spec: SyntheticSpec) -> np.ndarray:
    w = min(spec.spacing)
    ext = _extent(spec)
    rng = np.random.default_rng(spec.seed)
    radii = [spec.radius_of(i) for i in range(spec.count)]
    margins = [r + w + 2.0 * max(spec.spacing) for r in radii]
    for r, mrg in zip(radii, margins):
        if any(ext[a] - 2 * mrg <= 0 for a in range(3)):
            raise SpecInfeasible(
                f"sphere radius {r} um cannot fit volume extent {tuple(ext)} um"
            )

    centers = []
    attempts = 0
    while len(centers) < spec.count:
        attempts += 1
        if attempts > 2000 * spec.count:
            raise SpecInfeasible(
                f"could not place {spec.count} non-overlapping spheres after {attempts} tries"
            )
        i = len(centers)
        mrg = margins[i]
        c = np.array([rng.uniform(mrg, ext[a] - mrg) for a in range(3)])
        ok = True
        for j, other in enumerate(centers):
            need = radii[i] + radii[j] + 2 * w + 2 * min(spec.spacing)
            if np.linalg.norm(c - other) <= need:
                ok = False
                break
        if ok:
            centers.append(c)

    x, y, z = _coords(spec)
    field = np.zeros((spec.dims[2], spec.dims[1], spec.dims[0]), dtype=np.float64)
    for c, r in zip(centers, radii):
        d = np.sqrt((x - c[0]) ** 2 + (y - c[1]) ** 2 + (z - c[2]) ** 2)
        np.maximum(field, _ramp(d, r, w), out=field)
    return field


def _tube_centers_y(spec: SyntheticSpec):
    # neighbouring surfaces sit exactly gap_um apart: centre step r_i + r_{i+1} + gap
    radii = [spec.radius_of(i) for i in range(spec.count)]
    ys = [0.0]
    for i in range(1, spec.count):
        ys.append(ys[-1] + radii[i - 1] + radii[i] + spec.gap_um)
    return radii, ys


def _tubes_field(spec: SyntheticSpec) -> np.ndarray:
    """Parallel tubes along x; neighbouring surfaces exactly gap_um apart."""
    w = min(spec.spacing)
    ext = _extent(spec)
    radii, ys = _tube_centers_y(spec)
    span = ys[-1]
    mrg = max(radii) + w + 2.0 * max(spec.spacing)
    if span + 2 * mrg > ext[1] or 2 * mrg > ext[2]:
        raise SpecInfeasible(
            f"{spec.count} tubes of radii {tuple(radii)} um with gap {spec.gap_um} um "
            f"need more than extent {tuple(ext)} um"
        )
    y0 = (ext[1] - span) / 2.0
    zc = ext[2] / 2.0

    _, y, z = _coords(spec)
    field = np.zeros((spec.dims[2], spec.dims[1], spec.dims[0]), dtype=np.float64)
    for i in range(spec.count):
        d = np.sqrt((y - (y0 + ys[i])) ** 2 + (z - zc) ** 2)
        np.maximum(field, _ramp(d, radii[i], w), out=field)  # broadcasts along x
    return field


def tube_axes(spec: SyntheticSpec):
    """(y, z) axis coordinates of each tube, matching _tubes_field placement."""
    ext = _extent(spec)
    _, ys = _tube_centers_y(spec)
    y0 = (ext[1] - ys[-1]) / 2.0
    zc = ext[2] / 2.0
    return [(y0 + yi, zc) for yi in ys]


def _capsule_dist(x, y, z, a, b):
    ax, ay, az = a
    bx, by, bz = b
    bax, bay, baz = bx - ax, by - ay, bz - az
    denom = bax * bax + bay * bay + baz * baz
    h = ((x - ax) * bax + (y - ay) * bay + (z - az) * baz) / denom
    h = np.clip(h, 0.0, 1.0)
    return np.sqrt((x - ax - h * bax) ** 2 + (y - ay - h * bay) ** 2 + (z - az - h * baz) ** 2)


def _tree_field(spec: SyntheticSpec) -> np.ndarray:
    """A trunk splitting into `count` branches, all capsules of one radius."""
    w = min(spec.spacing)
    ext = _extent(spec)
    r = spec.radius_of(0)
    mrg = r + w + 2.0 * max(spec.spacing)
    if any(ext[a] - 2 * mrg <= 0 for a in range(3)):
        raise SpecInfeasible(f"branch radius {r} um cannot fit extent {tuple(ext)} um")

    cx, cy = ext[0] / 2.0, ext[1] / 2.0
    trunk_a = (cx, cy, mrg)
    junction = (cx, cy, ext[2] * 0.5)
    reach = min(ext[0] / 2.0 - mrg, ext[2] * 0.5 - mrg)
    segments = [(trunk_a, junction)]
    n_br = spec.count
    for i in range(n_br):
        frac = 0.5 if n_br == 1 else i / (n_br - 1)
        beta = np.radians(-60.0 + 120.0 * frac)
        tip = (
            cx + reach * np.sin(beta),
            cy,
            junction[2] + reach * np.cos(beta),
        )
        segments.append((junction, tip))

    x, y, z = _coords(spec)
    field = np.zeros((spec.dims[2], spec.dims[1], spec.dims[0]), dtype=np.float64)
    for a, b in segments:
        np.maximum(field, _ramp(_capsule_dist(x, y, z, a, b), r, w), out=field)
    return field


def synth_volume(spec: SyntheticSpec) -> Volume:
    if spec.kind == "spheres":
        field = _spheres_field(spec)
    elif spec.kind == "tubes":
        field = _tubes_field(spec)
    else:
        field = _tree_field(spec)
    if spec.noise_amplitude > 0:
        rng = np.random.default_rng(spec.seed + 1)
        field = field + rng.uniform(-spec.noise_amplitude, spec.noise_amplitude, field.shape)
    field = np.clip(field, 0.0, 1.0).astype(np.float32)
    return Volume(field, spec.spacing, provenance=f"synthetic {spec.kind} seed={spec.seed}")


def synth_mesh(spec: SyntheticSpec, iso: float = 0.5) -> IndexedMesh:
    vol = synth_volume(spec)
    mesh = weld(marching_cubes(vol, iso), default_weld_epsilon(vol.spacing))
    return mesh.with_normals(compute_normals(mesh))


def torus_mesh(nu: int, nv: int, ring_radius_um: float, tube_radius_um: float) -> IndexedMesh:
    """Parametric torus lattice, welded by construction.

    nu*nv vertices and 2*nu*nv faces; handy as a deterministic large-mesh
    generator (nu=2000, nv=1000 gives two million vertices).
    """
    if nu < 3 or nv < 3:
        raise ValueError("need nu, nv >= 3")
    u = 2.0 * np.pi * np.arange(nu, dtype=np.float64) / nu
    v = 2.0 * np.pi * np.arange(nv, dtype=np.float64) / nv
    cu, su = np.cos(u)[:, None], np.sin(u)[:, None]
    cv, sv = np.cos(v)[None, :], np.sin(v)[None, :]
    ring = ring_radius_um + tube_radius_um * cv
    pos = np.empty((nu, nv, 3), dtype=np.float64)
    pos[:, :, 0] = ring * cu
    pos[:, :, 1] = ring * su
    pos[:, :, 2] = np.broadcast_to(tube_radius_um * sv, (nu, nv))
    positions = pos.reshape(-1, 3).astype(np.float32)

    nrm = np.empty((nu, nv, 3), dtype=np.float64)
    nrm[:, :, 0] = cv * cu
    nrm[:, :, 1] = cv * su
    nrm[:, :, 2] = np.broadcast_to(sv, (nu, nv))
    normals = nrm.reshape(-1, 3)

    i = np.arange(nu, dtype=np.int64)[:, None]
    j = np.arange(nv, dtype=np.int64)[None, :]
    a = (i * nv + j).ravel()
    b = (((i + 1) % nu) * nv + j).ravel()
    c = (((i + 1) % nu) * nv + (j + 1) % nv).ravel()
    d = (i * nv + (j + 1) % nv).ravel()
    faces = np.empty((2 * nu * nv, 3), dtype=np.int32)
    faces[0::2, 0] = a
    faces[0::2, 1] = b
    faces[0::2, 2] = c
    faces[1::2, 0] = a
    faces[1::2, 1] = c
    faces[1::2, 2] = d
    return IndexedMesh(positions=positions, faces=faces, normals=normals)
