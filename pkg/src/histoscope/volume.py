"""Scalar voxel volumes built from registered section stacks.

A Volume is an anisotropic grid of intensities in [0, 1] with physical
spacing in micrometres. The array layout is (nz, ny, nx) C-order, so x is
the fastest-varying axis. Volumes are immutable; every operation returns a
new Volume.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image
from scipy import ndimage

from .errors import (
    DegenerateVolume,
    EmptyStack,
    MixedDimensions,
    RadiusExceedsVolume,
    UnreadableImage,
)

CHANNELS = ("luminance-inverted", "r", "g", "b")

_HVOL_MAGIC = b"HVOL"
_HVOL_VERSION = 1


@dataclass(frozen=True)
class Volume:
    """Immutable scalar volume.

    data : float32 array of shape (nz, ny, nx), values in [0, 1]
    spacing : (sx, sy, sz) micrometres per voxel
    provenance : free-text description of where the data came from
    """

    data: np.ndarray
    spacing: tuple[float, float, float]
    provenance: str = ""

    def __post_init__(self):
        if self.data.ndim != 3:
            raise ValueError(f"volume data must be 3D, got shape {self.data.shape}")
        if self.data.dtype != np.float32:
            object.__setattr__(self, "data", self.data.astype(np.float32))
        if len(self.spacing) != 3 or any(s <= 0 for s in self.spacing):
            raise ValueError(f"spacing must be three positive values, got {self.spacing}")
        if self.data.size and (self.data.min() < 0.0 or self.data.max() > 1.0):
            raise ValueError("volume values must lie in [0, 1]")
        object.__setattr__(self, "spacing", tuple(float(s) for s in self.spacing))
        self.data.setflags(write=False)

    @property
    def dims(self) -> tuple[int, int, int]:
        """Voxel counts as (nx, ny, nz)."""
        nz, ny, nx = self.data.shape
        return (nx, ny, nz)


@dataclass(frozen=True)
class FilterSpec:
    """One pre-meshing filter: greyscale closing or Gaussian blur."""

    kind: str
    radius_vox: int | None = None
    sigma_vox: float | None = None

    def __post_init__(self):
        if self.kind == "close":
            if self.radius_vox is None or self.sigma_vox is not None:
                raise ValueError("close takes radius_vox only")
            if self.radius_vox < 1:
                raise ValueError("radius_vox must be >= 1")
        elif self.kind == "blur":
            if self.sigma_vox is None or self.radius_vox is not None:
                raise ValueError("blur takes sigma_vox only")
            if self.sigma_vox <= 0:
                raise ValueError("sigma_vox must be > 0")
        else:
            raise ValueError(f"unknown filter kind {self.kind!r}")

    @classmethod
    def close(cls, radius_vox: int) -> "FilterSpec":
        return cls(kind="close", radius_vox=int(radius_vox))

    @classmethod
    def blur(cls, sigma_vox: float) -> "FilterSpec":
        return cls(kind="blur", sigma_vox=float(sigma_vox))


def _read_image(path: Path) -> np.ndarray:
    """Decode one section image to float32 in [0, 1], shape (h, w) or (h, w, c)."""
    try:
        with Image.open(path) as img:
            img.load()
            arr = np.asarray(img)
    except FileNotFoundError:
        raise UnreadableImage(f"{path}: file not found")
    except Exception as exc:
        raise UnreadableImage(f"{path}: {exc}")

    if arr.dtype == np.uint8:
        out = arr.astype(np.float32) / 255.0
    elif arr.dtype == np.uint16:
        out = arr.astype(np.float32) / 65535.0
    elif arr.dtype == np.int32:
        # PIL mode "I": 16-bit greyscale PNGs land here
        out = np.clip(arr.astype(np.float32) / 65535.0, 0.0, 1.0)
    elif arr.dtype == np.bool_:
        out = arr.astype(np.float32)
    elif np.issubdtype(arr.dtype, np.floating):
        out = np.clip(arr.astype(np.float32), 0.0, 1.0)
    else:
        raise UnreadableImage(f"{path}: unsupported pixel type {arr.dtype}")
    return out


def _extract_channel(plane: np.ndarray, channel: str) -> np.ndarray:
    if channel not in CHANNELS:
        raise ValueError(f"channel must be one of {CHANNELS}, got {channel!r}")
    if plane.ndim == 2:
        grey = plane
        bands = {"r": plane, "g": plane, "b": plane}
    else:
        rgb = plane[..., :3]
        grey = rgb[..., 0] * 0.299 + rgb[..., 1] * 0.587 + rgb[..., 2] * 0.114
        bands = {"r": rgb[..., 0], "g": rgb[..., 1], "b": rgb[..., 2]}
    if channel == "luminance-inverted":
        # dark stain carries the signal, so ink maps to high scalar
        out = 1.0 - grey
    else:
        out = bands[channel]
    return np.ascontiguousarray(out, dtype=np.float32)


def load_stack(
    image_paths,
    pixel_pitch_um: float,
    section_thickness_um: float,
    channel: str = "luminance-inverted",
) -> Volume:
    """Stack registered section images into a Volume.

    Section k becomes plane z=k. Pixel (x, y) of each image maps to voxel
    (x, y) so the volume shares the image coordinate frame.
    """
    paths = [Path(p) for p in image_paths]
    if not paths:
        raise EmptyStack("no section images supplied")
    if pixel_pitch_um <= 0 or section_thickness_um <= 0:
        raise ValueError("pixel pitch and section thickness must be > 0")

    planes = []
    shape = None
    for p in paths:
        plane = _extract_channel(_read_image(p), channel)
        if shape is None:
            shape = plane.shape
        elif plane.shape != shape:
            raise MixedDimensions(f"{p}: image is {plane.shape[::-1]}, expected {shape[::-1]}")
        planes.append(plane)

    data = np.stack(planes, axis=0)
    return Volume(
        data,
        (float(pixel_pitch_um), float(pixel_pitch_um), float(section_thickness_um)),
        provenance=f"stack of {len(paths)} images, channel={channel}",
    )


def interpolate_z(v: Volume, factor: int) -> Volume:
    """Insert factor-1 linearly blended planes between each original pair.

    Output has (nz-1)*factor + 1 planes; the original planes are copied
    bit-identically, so interpolation never perturbs measured data.
    """
    factor = int(factor)
    if factor < 1:
        raise ValueError("factor must be >= 1")
    sx, sy, sz = v.spacing
    if factor == 1:
        return Volume(v.data.copy(), v.spacing, v.provenance)

    nz, ny, nx = v.data.shape
    new_sp = (sx, sy, sz / factor)
    if nz == 1:
        return Volume(v.data.copy(), new_sp, v.provenance)

    new_nz = (nz - 1) * factor + 1
    out = np.empty((new_nz, ny, nx), dtype=np.float32)
    out[::factor] = v.data
    lo = v.data[:-1]
    hi = v.data[1:]
    for j in range(1, factor):
        t = np.float32(j / factor)
        blend = (np.float32(1.0) - t) * lo + t * hi
        np.clip(blend, 0.0, 1.0, out=blend)
        out[j::factor] = blend
    return Volume(out, new_sp, f"{v.provenance} | z-interpolated x{factor}".strip(" |"))


def apply_filter(v: Volume, f: FilterSpec) -> Volume:
    """Apply one FilterSpec. Borders are edge-clamped; output stays in [0, 1]."""
    if f.kind == "close":
        side = 2 * f.radius_vox + 1
        nx, ny, nz = v.dims
        if side > min(nx, ny, nz):
            raise RadiusExceedsVolume(
                f"structuring element side {side} exceeds smallest volume dim {min(nx, ny, nz)}"
            )
        dil = ndimage.grey_dilation(v.data, size=(side, side, side), mode="nearest")
        out = ndimage.grey_erosion(dil, size=(side, side, side), mode="nearest")
        tag = f"close r={f.radius_vox}"
    else:
        out = ndimage.gaussian_filter(v.data, sigma=f.sigma_vox, mode="nearest")
        tag = f"blur sigma={f.sigma_vox}"
    out = np.clip(out, 0.0, 1.0)
    return Volume(out, v.spacing, f"{v.provenance} | {tag}".strip(" |"))


def save_volume(v: Volume, path) -> None:
    """Write the cache format: HVOL header then raw f32 data, x-fastest."""
    nx, ny, nz = v.dims
    header = (
        _HVOL_MAGIC
        + struct.pack("<I", _HVOL_VERSION)
        + struct.pack("<3Q", nx, ny, nz)
        + struct.pack("<3d", *v.spacing)
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(v.data, dtype="<f4").tobytes())


def load_volume(path) -> Volume:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise UnreadableImage(f"{path}: {exc}")
    head = 4 + 4 + 24 + 24
    if len(raw) < head or raw[:4] != _HVOL_MAGIC:
        raise UnreadableImage(f"{path}: not a volume cache file")
    (version,) = struct.unpack_from("<I", raw, 4)
    if version != _HVOL_VERSION:
        raise UnreadableImage(f"{path}: unsupported cache version {version}")
    nx, ny, nz = struct.unpack_from("<3Q", raw, 8)
    spacing = struct.unpack_from("<3d", raw, 32)
    expected = nx * ny * nz * 4
    if len(raw) != head + expected:
        raise UnreadableImage(f"{path}: truncated cache (expected {expected} data bytes)")
    data = np.frombuffer(raw, dtype="<f4", offset=head).reshape(nz, ny, nx).copy()
    return Volume(data, spacing, provenance=f"cache {path.name}")


def require_min_dims(v: Volume, minimum: int) -> None:
    """Raise DegenerateVolume when any axis is shorter than minimum voxels."""
    nx, ny, nz = v.dims
    if min(nx, ny, nz) < minimum:
        raise DegenerateVolume(f"volume dims {(nx, ny, nz)} need at least {minimum} on each axis")
