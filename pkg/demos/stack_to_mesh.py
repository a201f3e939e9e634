"""Minimal end-to-end run: a stack of section images becomes a welded,
shaded surface mesh.

The input here is generated on the fly (dark discs on a bright background,
like stained vessels cut crosswise), so the demo runs without any data
checkout. Swap make_fake_sections() for a glob of your own PNGs.
"""

import sys
from pathlib import Path

import numpy as np
from PIL import Image

from histoscope import (
    FilterSpec,
    apply_filter,
    compute_normals,
    default_weld_epsilon,
    interpolate_z,
    load_stack,
    marching_cubes,
    save_mesh,
    weld,
)

PITCH_UM = 0.5
THICKNESS_UM = 3.5


def make_fake_sections(folder: Path, count=12, size=(160, 120)):
    folder.mkdir(parents=True, exist_ok=True)
    paths = []
    xs = np.arange(size[0]) * PITCH_UM
    ys = np.arange(size[1]) * PITCH_UM
    for k in range(count):
        z = k * THICKNESS_UM
        # one straight vessel and one that drifts with depth
        cy1, cx1 = 25.0, 20.0 + 0.6 * z
        cy2, cx2 = 42.0, 55.0
        d1 = np.hypot(ys[:, None] - cy1, xs[None, :] - cx1)
        d2 = np.hypot(ys[:, None] - cy2, xs[None, :] - cx2)
        stain = np.maximum(np.clip(1.4 - d1 / 6.0, 0, 1), np.clip(1.4 - d2 / 9.0, 0, 1))
        img = np.round(255 * (1.0 - 0.85 * stain)).astype(np.uint8)
        p = folder / f"section_{k:03d}.png"
        Image.fromarray(img, mode="L").save(p)
        paths.append(p)
    return paths


def main(out_dir: Path):
    paths = make_fake_sections(out_dir / "sections")
    vol = load_stack(paths, pixel_pitch_um=PITCH_UM, section_thickness_um=THICKNESS_UM)
    print(f"stack loaded: {vol.data.shape} voxels, spacing {vol.spacing} um")

    vol = interpolate_z(vol, factor=7)  # 3.5 um slabs -> 0.5 um steps
    vol = apply_filter(vol, FilterSpec.close(1))  # radius is isotropic now
    vol = apply_filter(vol, FilterSpec.blur(0.7))
    print(f"after interpolation/closing/blur: {vol.data.shape}, spacing {vol.spacing}")

    soup = marching_cubes(vol, iso=0.5)
    mesh = weld(soup, default_weld_epsilon(vol.spacing))
    mesh = mesh.with_normals(compute_normals(mesh))
    print(f"surface: {mesh.vertex_count} vertices, {mesh.face_count} faces")

    out = out_dir / "vessels.ply"
    save_mesh(mesh, out)
    print(f"wrote {out}")


if __name__ == "__main__":
    main(Path(sys.argv[1]) if len(sys.argv) > 1 else Path("demo_out"))
