"""Build a self-contained demo project directory for the HTTP service and
the browser viewer.

Creates section PNGs, two meshes extracted from the same synthetic stain
field, a project.json tying them together, and a first paint stroke plus
one annotation so the viewer has something to show on first load. The whole
thing is rebuilt from scratch on every run; point the server at it with:

    python3 -m histoscope.cli serve --config demo_project/project.json
"""

import json
import shutil
import sys
from pathlib import Path

import numpy as np
from PIL import Image

from histoscope import (
    IndexedMesh,
    PaintOperation,
    SyntheticSpec,
    compute_normals,
    default_weld_epsilon,
    interpolate_z,
    marching_cubes,
    save_mesh,
    synth_mesh,
    synth_volume,
    weld,
)
from histoscope.analytics import utc_now
from histoscope.project import ProjectConfig, ProjectState

PITCH_UM = 0.5
THICKNESS_UM = 7.0


def build_vessels(out_dir: Path):
    """Anisotropic stain volume -> section PNGs -> interpolated mesh."""
    spec = SyntheticSpec(
        kind="tubes",
        count=3,
        radii_um=(7.0, 3.5),
        dims=(192, 144, 8),
        spacing=(PITCH_UM, PITCH_UM, THICKNESS_UM),
        gap_um=2.0,
        seed=11,
    )
    vol = synth_volume(spec)

    image_names = []
    for k in range(vol.data.shape[0]):
        # stained structures show dark on the scanned section
        plane = np.round(255.0 * (1.0 - vol.data[k])).astype(np.uint8)
        name = f"s{k:02d}.png"
        Image.fromarray(plane, mode="L").save(out_dir / name)
        image_names.append(name)

    iso_vol = interpolate_z(vol, factor=int(THICKNESS_UM / PITCH_UM))
    soup = marching_cubes(iso_vol, 0.5)
    mesh = weld(soup, default_weld_epsilon(iso_vol.spacing))
    mesh = mesh.with_normals(compute_normals(mesh))
    return mesh, image_names


def build_ball(offset):
    spec = SyntheticSpec(
        kind="spheres", count=1, radii_um=(6.0,), dims=(32, 32, 32),
        spacing=(0.5, 0.5, 0.5),
    )
    m = synth_mesh(spec)
    return IndexedMesh(
        positions=m.positions + np.asarray(offset, dtype=m.positions.dtype),
        faces=m.faces,
        normals=m.normals,
    )


def main(out_dir: Path):
    if out_dir.exists():
        shutil.rmtree(out_dir)
    out_dir.mkdir(parents=True)

    vessels, image_names = build_vessels(out_dir)
    ball = build_ball((70.0, 50.0, 13.0))
    save_mesh(vessels, out_dir / "vessels.ply")
    save_mesh(ball, out_dir / "ball.ply")
    print(f"vessels: {vessels.vertex_count} vertices, ball: {ball.vertex_count}")

    cfg_path = out_dir / "project.json"
    cfg_path.write_text(
        json.dumps(
            {
                "name": "demo block",
                "meshes": [
                    {"id": "vessels", "path": "vessels.ply", "display_name": "Vessel tree"},
                    {"id": "ball", "path": "ball.ply", "display_name": "Calibration ball"},
                ],
                "stack": {
                    "images": image_names,
                    "pixel_pitch_um": PITCH_UM,
                    "thickness_um": THICKNESS_UM,
                },
                # at 10 m per mm the block spans ~1 m, so the default 0.6 m
                # front clip lands inside it instead of past the far corner
                "default_clip_distance_m": 0.6,
                "world_scale_m_per_mm": 10.0,
            },
            indent=2,
        )
    )

    # seed one stroke and one marker through the real project machinery so
    # the journals on disk are exactly what the service would have written
    state = ProjectState(ProjectConfig.load(cfg_path))
    seed = vessels.positions[vessels.vertex_count // 2]
    painted, seq = state.paint(
        PaintOperation(
            mesh_id="vessels",
            seed_point=tuple(float(c) for c in seed),
            tool_radius_um=8.0,
            color=(90, 200, 255),
            timestamp=utc_now(),
        )
    )
    pose = np.eye(4)
    pose[:3, 3] = (float(seed[0]), float(seed[1]), -40.0)
    ann = state.annotate(
        position=[float(c) for c in seed],
        radius_um=3.0,
        label="calibre change",
        color=[255, 220, 0],
        view_transform=pose.tolist(),
    )
    print(f"seeded paint of {painted.size} vertices (journal seq {seq})")
    print(f"seeded annotation #{ann.id} on section {ann.section_index}")
    print(f"project ready: {cfg_path}")
    print(f"serve it:  python3 -m histoscope.cli serve --config {cfg_path}")


if __name__ == "__main__":
    main(Path(sys.argv[1]) if len(sys.argv) > 1 else Path("demo_project"))
