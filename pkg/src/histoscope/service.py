"""HTTP service exposing a loaded project to the browser viewer.

All endpoints live under /api. Binary payloads (meshes, section images) are
streamed as-is; everything else is JSON. Domain errors map onto status codes
here and nowhere else, so library code stays transport-free.
"""

from __future__ import annotations

import os
import socket
from pathlib import Path

from typing import Annotated

from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse, RedirectResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field, field_validator

from .analytics import PaintOperation, utc_now
from .errors import (
    HistoscopeError,
    IndexOutOfRange,
    NoSeedVertex,
    PortBusy,
    StoreUnavailable,
    UnknownAnnotation,
    UnknownMesh,
)
from .project import UI_DIR_ENV, ProjectConfig, ProjectState

DEFAULT_BIND = "127.0.0.1:8780"

_STATUS_FOR = {
    UnknownMesh: 404,
    UnknownAnnotation: 404,
    IndexOutOfRange: 404,
    NoSeedVertex: 409,
    StoreUnavailable: 503,
}


Channel = Annotated[int, Field(ge=0, le=255)]


class PaintRequest(BaseModel):
    mesh_id: str
    seed_point: list[float] = Field(min_length=3, max_length=3)
    tool_radius_um: float = Field(gt=0)
    color: list[Channel] = Field(min_length=3, max_length=3)
    geodesic_factor: float = Field(default=1.0, gt=0)
    author: str = ""


class AnnotationRequest(BaseModel):
    position: list[float] = Field(min_length=3, max_length=3)
    radius_um: float = Field(gt=0)
    label: str = ""
    color: list[Channel] = Field(default=[255, 220, 0], min_length=3, max_length=3)
    view_transform: list[list[float]]
    author: str = ""

    @field_validator("view_transform")
    @classmethod
    def _must_be_4x4(cls, v):
        if len(v) != 4 or any(len(row) != 4 for row in v):
            raise ValueError("view_transform must be a 4x4 matrix")
        return v


def _annotation_json(ann) -> dict:
    rec = ann.to_record()
    rec.pop("type", None)
    return rec


def find_ui_dir(explicit=None):
    """Locate the built viewer bundle, if any. Explicit argument wins, then
    the environment, then a frontend/dist next to the repo or cwd."""
    candidates = []
    if explicit:
        candidates.append(Path(explicit))
    env = os.environ.get(UI_DIR_ENV)
    if env:
        candidates.append(Path(env))
    candidates.append(Path(__file__).resolve().parents[2] / "frontend" / "dist")
    candidates.append(Path.cwd() / "frontend" / "dist")
    for c in candidates:
        if c.is_dir() and (c / "index.html").is_file():
            return c
    return None


def create_app(state: ProjectState, ui_dir=None) -> FastAPI:
    """Build the API app. ui_dir: None auto-discovers a viewer bundle,
    False disables the /ui mount, a path serves that bundle."""
    app = FastAPI(title="histoscope", docs_url=None, redoc_url=None)
    app.state.project = state

    @app.exception_handler(HistoscopeError)
    async def _domain_error(request: Request, exc: HistoscopeError):
        code = _STATUS_FOR.get(type(exc), 400)
        return JSONResponse(
            status_code=code,
            content={"error": type(exc).__name__, "message": str(exc)},
        )

    @app.get("/api/project")
    def get_project():
        return state.manifest()

    @app.get("/api/mesh/{mesh_id}")
    def get_mesh(mesh_id: str):
        data = state.mesh_bytes(mesh_id)
        return Response(
            content=data,
            media_type="application/octet-stream",
            headers={"X-Digest": state.mesh_digest(mesh_id)},
        )

    @app.get("/api/export/{mesh_id}")
    def get_export(mesh_id: str):
        data = state.mesh_bytes(mesh_id)
        return Response(
            content=data,
            media_type="application/octet-stream",
            headers={
                "Content-Disposition": f'attachment; filename="{mesh_id}.ply"'
            },
        )

    @app.get("/api/section/{index}")
    def get_section(index: int, mip: int = 0):
        data = state.section_png(index, mip)
        return Response(content=data, media_type="image/png")

    @app.get("/api/annotations")
    def list_annotations():
        return {"annotations": [_annotation_json(a) for a in state.annotations.list()]}

    @app.post("/api/annotations")
    def add_annotation(req: AnnotationRequest):
        ann = state.annotate(
            position=req.position,
            radius_um=req.radius_um,
            label=req.label,
            color=req.color,
            view_transform=req.view_transform,
            author=req.author,
        )
        return _annotation_json(ann)

    @app.delete("/api/annotations/{ann_id}")
    def delete_annotation(ann_id: int):
        state.annotations.delete(ann_id)
        return {"deleted": ann_id}

    @app.post("/api/paint")
    def post_paint(req: PaintRequest):
        op = PaintOperation(
            mesh_id=req.mesh_id,
            seed_point=tuple(req.seed_point),
            tool_radius_um=req.tool_radius_um,
            color=tuple(req.color),
            geodesic_factor=req.geodesic_factor,
            author=req.author,
            timestamp=utc_now(),
        )
        painted, seq = state.paint(op)
        return {
            "painted_count": int(painted.size),
            "journal_seq": seq,
            "painted": painted.tolist(),
        }

    ui = None if ui_dir is False else find_ui_dir(ui_dir)
    if ui is not None:
        app.mount("/ui", StaticFiles(directory=str(ui), html=True), name="ui")

        @app.get("/")
        def root_redirect():
            return RedirectResponse("/ui/")

    else:

        @app.get("/")
        def root_info():
            return {"service": "histoscope", "project": state.config.name, "api": "/api/project"}

    return app


def parse_bind(bind: str):
    host, _, port = bind.rpartition(":")
    if not host or not port.isdigit():
        raise ValueError(f"bind must look like host:port, got {bind!r}")
    return host, int(port)


def serve(config_path, bind: str = DEFAULT_BIND, log_level: str = "info", ui_dir=None):
    """Load the project and serve it until interrupted."""
    import uvicorn

    host, port = parse_bind(bind)
    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    try:
        probe.bind((host, port))
    except OSError as exc:
        raise PortBusy(f"cannot bind {host}:{port}: {exc}")
    finally:
        probe.close()

    state = ProjectState(ProjectConfig.load(config_path))
    app = create_app(state, ui_dir=ui_dir)
    uvicorn.run(app, host=host, port=port, log_level=log_level, access_log=False)
