"""Annotations, the section map, and what survives a crash.

Markers are appended to a JSONL store together with the camera pose they
were placed from and the section index their depth falls on. The script
reopens the store from disk afterwards to show that nothing lived only in
memory.
"""

import sys
from pathlib import Path

import numpy as np

from histoscope import (
    AnnotationStore,
    SectionStack,
    place_annotation,
    section_index_for,
)

THICKNESS_UM = 7.0
COUNT = 21


def main(out_dir: Path):
    out_dir.mkdir(parents=True, exist_ok=True)
    stack = SectionStack(
        image_paths=tuple(f"s{i:02d}.png" for i in range(COUNT)),
        width=2300,
        height=2300,
        pixel_pitch_um=0.416,
        thickness_um=THICKNESS_UM,
        origin=(0.0, 0.0, 0.0),
    )

    for z in (0.0, 10.5, 69.9, 70.0, 1e6, -3.0):
        idx = section_index_for(z, THICKNESS_UM, COUNT)
        print(f"depth {z:>9.1f} um -> section {idx:2d}")

    store_path = out_dir / "annotations.jsonl"
    store_path.unlink(missing_ok=True)
    store = AnnotationStore(store_path)
    pose = np.eye(4).tolist()
    for label, pos in [
        ("sprouting tip", (140.0, 85.0, 10.5)),
        ("lumen widens", (310.0, 420.0, 96.0)),
    ]:
        ann = place_annotation(store, pos, 4.0, label, (255, 220, 0), pose, stack)
        print(f"#{ann.id} {label!r} stored on section {ann.section_index}")
    store.close()

    # a fresh handle sees exactly what was acknowledged above
    reopened = AnnotationStore(store_path)
    print(f"reloaded {len(reopened.list())} annotations from {store_path}")


if __name__ == "__main__":
    main(Path(sys.argv[1]) if len(sys.argv) > 1 else Path("demo_out"))
