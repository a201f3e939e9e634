"""Original serial sections as a positioned stack, plus the overlay cuboid.

The stack, the volume, and the meshes share one world frame in micrometres:
image pixel (0, 0) of section 0 sits at the stack origin, and section k
occupies the half-open z slab [origin_z + k*t, origin_z + (k+1)*t).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import EmptyStack, IndexOutOfRange, MixedDimensions, UnreadableImage


@dataclass(frozen=True)
class SectionStack:
    image_paths: tuple
    width: int                 # px, common to all sections
    height: int
    pixel_pitch_um: float
    thickness_um: float
    origin: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if not self.image_paths:
            raise EmptyStack("stack needs at least one section image")
        if self.pixel_pitch_um <= 0 or self.thickness_um <= 0:
            raise ValueError("pixel pitch and thickness must be > 0")
        if len(self.origin) != 3:
            raise ValueError("origin must be a 3D point")
        object.__setattr__(self, "image_paths", tuple(Path(p) for p in self.image_paths))
        object.__setattr__(self, "origin", tuple(float(c) for c in self.origin))

    @classmethod
    def from_paths(cls, paths, pixel_pitch_um, thickness_um, origin=(0.0, 0.0, 0.0)):
        """Build a stack, probing image headers for common dimensions."""
        paths = [Path(p) for p in paths]
        if not paths:
            raise EmptyStack("stack needs at least one section image")
        size = None
        for p in paths:
            try:
                with Image.open(p) as img:
                    this = img.size
            except FileNotFoundError:
                raise UnreadableImage(f"{p}: file not found")
            except Exception as exc:
                raise UnreadableImage(f"{p}: {exc}")
            if size is None:
                size = this
            elif this != size:
                raise MixedDimensions(f"{p}: image is {this}, expected {size}")
        return cls(
            image_paths=tuple(paths),
            width=size[0],
            height=size[1],
            pixel_pitch_um=float(pixel_pitch_um),
            thickness_um=float(thickness_um),
            origin=origin,
        )

    @property
    def count(self) -> int:
        return len(self.image_paths)

    def load_image(self, index: int) -> Image.Image:
        if not 0 <= index < self.count:
            raise IndexOutOfRange(f"section {index} outside [0, {self.count})")
        try:
            img = Image.open(self.image_paths[index])
            img.load()
            return img
        except OSError as exc:
            raise UnreadableImage(f"{self.image_paths[index]}: {exc}")

    def section_index_for(self, z_um: float) -> int:
        return section_index_for(z_um, self.thickness_um, self.count, self.origin[2])


@dataclass(frozen=True)
class SectionCuboid:
    """Opaque overlay box, exactly one section thick in z."""

    section_index: int
    min_corner: tuple
    size: tuple              # size[2] == thickness by construction
    texture_path: Path
    front_face_culling: bool

    @property
    def max_corner(self) -> tuple:
        return tuple(c + s for c, s in zip(self.min_corner, self.size))


def cuboid_for(stack: SectionStack, index: int, culling: bool) -> SectionCuboid:
    """Axis-aligned box of section `index`: full xy span, one thickness in z."""
    if not 0 <= index < stack.count:
        raise IndexOutOfRange(f"section {index} outside [0, {stack.count})")
    ox, oy, oz = stack.origin
    t = stack.thickness_um
    return SectionCuboid(
        section_index=index,
        min_corner=(ox, oy, oz + index * t),
        size=(stack.width * stack.pixel_pitch_um, stack.height * stack.pixel_pitch_um, t),
        texture_path=stack.image_paths[index],
        front_face_culling=bool(culling),
    )


def step_section(current: int, delta: int, count: int) -> int:
    """Advance the displayed section, clamped to [0, count-1]."""
    if count < 1:
        raise ValueError("count must be >= 1")
    return max(0, min(int(current) + int(delta), count - 1))


def section_index_for(z_um, thickness_um: float, count: int, origin_z: float = 0.0):
    """Map world z to the section whose half-open slab contains it, clamped.

    Accepts a scalar or an ndarray of z values.
    """
    if thickness_um <= 0 or count < 1:
        raise ValueError("need thickness > 0 and count >= 1")
    z = np.asarray(z_um, dtype=np.float64)
    idx = np.floor((z - origin_z) / thickness_um)
    idx = np.clip(idx, 0, count - 1).astype(np.int64)
    if np.isscalar(z_um) or getattr(z_um, "ndim", 1) == 0:
        return int(idx)
    return idx
