"""Project configuration and the runtime state the service exposes.

A project file is JSON naming the meshes, the section stack, and the two
journals. Relative paths resolve against the config file's directory, or
against HISTOSCOPE_DATA_DIR when that is set. On load, the paint journal is
replayed so served colours always reflect every acknowledged edit.
"""

from __future__ import annotations

import glob as _glob
import hashlib
import io
import json
import os
import threading
from dataclasses import dataclass
from pathlib import Path

from PIL import Image

from .analytics import (
    AnnotationStore,
    PaintJournal,
    PaintOperation,
    geodesic_paint,
    journal_replay,
    place_annotation,
)
from .errors import (
    ConfigInvalid,
    HistoscopeError,
    IndexOutOfRange,
    IoFailure,
    UnknownMesh,
)
from .isosurface import compute_normals
from .mesh import build_adjacency
from .ply import load_mesh, mesh_to_ply_bytes
from .sections import SectionStack

DATA_DIR_ENV = "HISTOSCOPE_DATA_DIR"
UI_DIR_ENV = "HISTOSCOPE_UI_DIR"


@dataclass(frozen=True)
class MeshEntry:
    id: str
    path: Path
    display_name: str
    initially_visible: bool = True


@dataclass(frozen=True)
class StackConfig:
    image_paths: tuple
    pixel_pitch_um: float
    thickness_um: float
    origin: tuple = (0.0, 0.0, 0.0)


@dataclass(frozen=True)
class ProjectConfig:
    name: str
    meshes: tuple
    stack: StackConfig
    journal_path: Path
    annotation_path: Path
    default_clip_distance_m: float = 0.6
    world_scale_m_per_mm: float = 1.0

    @classmethod
    def load(cls, config_path) -> "ProjectConfig":
        config_path = Path(config_path)
        try:
            raw = json.loads(config_path.read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigInvalid(f"{config_path}: {exc}")
        except json.JSONDecodeError as exc:
            raise ConfigInvalid(f"{config_path}: not valid JSON ({exc})")

        env_dir = os.environ.get(DATA_DIR_ENV)
        base = Path(env_dir) if env_dir else config_path.parent

        def resolve(p) -> Path:
            p = Path(p)
            return p if p.is_absolute() else base / p

        if not isinstance(raw, dict):
            raise ConfigInvalid(f"{config_path}: top level must be an object")

        name = raw.get("name")
        if not isinstance(name, str) or not name:
            raise ConfigInvalid("project needs a non-empty 'name'")

        mesh_entries = []
        seen = set()
        for i, m in enumerate(raw.get("meshes", [])):
            if not isinstance(m, dict) or "id" not in m or "path" not in m:
                raise ConfigInvalid(f"meshes[{i}] needs 'id' and 'path'")
            mid = str(m["id"])
            if mid in seen:
                raise ConfigInvalid(f"duplicate mesh id {mid!r}")
            seen.add(mid)
            path = resolve(m["path"])
            if not path.is_file():
                raise ConfigInvalid(f"mesh {mid!r}: file not found: {path}")
            mesh_entries.append(
                MeshEntry(
                    id=mid,
                    path=path,
                    display_name=str(m.get("display_name", mid)),
                    initially_visible=bool(m.get("initially_visible", True)),
                )
            )

        st = raw.get("stack")
        if not isinstance(st, dict):
            raise ConfigInvalid("project needs a 'stack' object")
        if "images" in st:
            image_paths = [resolve(p) for p in st["images"]]
        elif "image_glob" in st:
            pattern = st["image_glob"]
            root = resolve(pattern)
            image_paths = [Path(p) for p in sorted(_glob.glob(str(root)))]
        else:
            raise ConfigInvalid("stack needs 'images' or 'image_glob'")
        if not image_paths:
            raise ConfigInvalid("stack resolved to zero images")
        for p in image_paths:
            if not Path(p).is_file():
                raise ConfigInvalid(f"stack image not found: {p}")
        try:
            pitch = float(st["pixel_pitch_um"])
            thickness = float(st["thickness_um"])
        except (KeyError, TypeError, ValueError):
            raise ConfigInvalid("stack needs numeric 'pixel_pitch_um' and 'thickness_um'")
        if pitch <= 0 or thickness <= 0:
            raise ConfigInvalid("stack pitch and thickness must be > 0")
        origin = tuple(float(c) for c in st.get("origin", (0.0, 0.0, 0.0)))
        if len(origin) != 3:
            raise ConfigInvalid("stack origin must be a 3D point")

        clip = float(raw.get("default_clip_distance_m", 0.6))
        scale = float(raw.get("world_scale_m_per_mm", 1.0))
        if clip < 0 or scale <= 0:
            raise ConfigInvalid("clip distance must be >= 0 and world scale > 0")

        return cls(
            name=name,
            meshes=tuple(mesh_entries),
            stack=StackConfig(tuple(image_paths), pitch, thickness, origin),
            journal_path=resolve(raw.get("journal_path", "journal.jsonl")),
            annotation_path=resolve(raw.get("annotation_path", "annotations.jsonl")),
            default_clip_distance_m=clip,
            world_scale_m_per_mm=scale,
        )


class _MeshState:
    def __init__(self, entry: MeshEntry, mesh, adjacency):
        self.entry = entry
        self.mesh = mesh
        self.adjacency = adjacency
        self.lock = threading.Lock()
        self._bytes = None
        self._digest = None

    def invalidate(self):
        self._bytes = None
        self._digest = None

    def ply_bytes(self) -> bytes:
        if self._bytes is None:
            self._bytes = mesh_to_ply_bytes(self.mesh)
            self._digest = hashlib.sha256(self._bytes).hexdigest()
        return self._bytes

    def digest(self) -> str:
        self.ply_bytes()
        return self._digest


class ProjectState:
    """Loaded project: meshes with adjacency, journals, section stack."""

    def __init__(self, config: ProjectConfig):
        self.config = config
        try:
            self.stack = SectionStack.from_paths(
                config.stack.image_paths,
                config.stack.pixel_pitch_um,
                config.stack.thickness_um,
                config.stack.origin,
            )
        except HistoscopeError as exc:
            raise ConfigInvalid(f"stack: {exc}")

        self.journal = PaintJournal(config.journal_path)
        self.annotations = AnnotationStore(config.annotation_path)
        self._section_cache: dict = {}
        self._section_lock = threading.Lock()

        self.meshes: dict[str, _MeshState] = {}
        ops_by_mesh: dict[str, list] = {}
        for op in self.journal.ops():
            ops_by_mesh.setdefault(op.mesh_id, []).append(op)
        for entry in config.meshes:
            try:
                mesh = load_mesh(entry.path)
            except HistoscopeError as exc:
                raise ConfigInvalid(f"mesh {entry.id!r}: {exc}")
            if mesh.normals is None:
                mesh = mesh.with_normals(compute_normals(mesh))
            adjacency = build_adjacency(mesh)
            ops = ops_by_mesh.get(entry.id, [])
            if ops:
                mesh = journal_replay(mesh, ops, mesh_id=entry.id, adj=adjacency)
            self.meshes[entry.id] = _MeshState(entry, mesh, adjacency)

    def _mesh_state(self, mesh_id: str) -> _MeshState:
        try:
            return self.meshes[mesh_id]
        except KeyError:
            raise UnknownMesh(f"no mesh with id {mesh_id!r}")

    def mesh_bytes(self, mesh_id: str) -> bytes:
        ms = self._mesh_state(mesh_id)
        with ms.lock:
            return ms.ply_bytes()

    def mesh_digest(self, mesh_id: str) -> str:
        ms = self._mesh_state(mesh_id)
        with ms.lock:
            return ms.digest()

    def paint(self, op: PaintOperation):
        """Apply one paint op: compute, persist, then publish. Returns
        (painted indices, journal sequence number)."""
        ms = self._mesh_state(op.mesh_id)
        with ms.lock:
            result = geodesic_paint(ms.mesh, ms.adjacency, op)
            seq = self.journal.append(op)      # durable before acknowledgement
            ms.mesh = ms.mesh.with_colors(result.colors)
            ms.invalidate()
        return result.painted, seq

    def annotate(self, position, radius_um, label, color, view_transform, author=""):
        return place_annotation(
            self.annotations, position, radius_um, label, color, view_transform,
            self.stack, author=author,
        )

    def export_colored(self, mesh_id: str, path) -> None:
        data = self.mesh_bytes(mesh_id)
        try:
            Path(path).write_bytes(data)
        except OSError as exc:
            raise IoFailure(f"{path}: {exc}")

    def max_mip(self) -> int:
        level = 0
        size = max(self.stack.width, self.stack.height)
        while size > 1:
            size >>= 1
            level += 1
        return level

    def section_png(self, index: int, mip: int = 0) -> bytes:
        if not 0 <= index < self.stack.count:
            raise IndexOutOfRange(f"section {index} outside [0, {self.stack.count})")
        mip = max(0, min(int(mip), self.max_mip()))
        key = (index, mip)
        with self._section_lock:
            cached = self._section_cache.get(key)
        if cached is not None:
            return cached
        img = self.stack.load_image(index)
        if img.mode not in ("L", "RGB", "RGBA", "I;16", "I"):
            img = img.convert("RGB")
        if mip > 0:
            w = max(1, self.stack.width >> mip)
            h = max(1, self.stack.height >> mip)
            img = img.convert("RGB") if img.mode in ("I;16", "I") else img
            img = img.resize((w, h), Image.BOX)
        buf = io.BytesIO()
        img.save(buf, format="PNG")
        data = buf.getvalue()
        with self._section_lock:
            self._section_cache[key] = data
        return data

    def manifest(self) -> dict:
        entries = []
        for mid in sorted(self.meshes):
            ms = self.meshes[mid]
            with ms.lock:
                entries.append(
                    {
                        "id": mid,
                        "name": ms.entry.display_name,
                        "digest": ms.digest(),
                        "vertex_count": ms.mesh.vertex_count,
                        "initially_visible": ms.entry.initially_visible,
                    }
                )
        return {
            "name": self.config.name,
            "meshes": entries,
            "stack": {
                "count": self.stack.count,
                "pitch": self.stack.pixel_pitch_um,
                "thickness": self.stack.thickness_um,
                "origin": list(self.stack.origin),
                "width_px": self.stack.width,
                "height_px": self.stack.height,
            },
            "defaults": {
                "clip_distance_m": self.config.default_clip_distance_m,
                "world_scale_m_per_mm": self.config.world_scale_m_per_mm,
            },
        }
