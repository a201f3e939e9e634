"""Command line driver: volume building, meshing, SDF colouring, serving.

Each subcommand maps onto library calls with no hidden state, so a run is
reproducible from its flags alone. An optional JSON config file can supply
flag defaults for the pipeline commands; explicit flags always win. Exit
codes: 0 on success, 2 for usage errors, 1 for runtime errors (the error
class name goes to stderr).
"""

from __future__ import annotations

import argparse
import glob as _glob
import json
import sys
from pathlib import Path

import numpy as np

from .analytics import sdf_to_colors, shape_diameter
from .errors import ConfigInvalid, HistoscopeError
from .isosurface import compute_normals, default_weld_epsilon, marching_cubes, weld
from .mesh import IndexedMesh, color_components, connected_components
from .ply import load_mesh, save_mesh
from .project import ProjectConfig, ProjectState
from .service import DEFAULT_BIND, serve
from .synth import KINDS, SyntheticSpec, synth_mesh, synth_volume
from .volume import (
    FilterSpec,
    apply_filter,
    interpolate_z,
    load_stack,
    load_volume,
    save_volume,
)

PERCENTILES = (5, 25, 50, 75, 95)


def _iso(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"iso must be a number, got {text!r}")
    if not 0.0 < value < 1.0:
        raise argparse.ArgumentTypeError(f"iso must be in (0, 1), got {value}")
    return value


def _nonneg_int(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {value}")
    return value


def _pos_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _nonneg_float(text: str) -> float:
    value = float(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {value}")
    return value


def _pos_float(text: str) -> float:
    value = float(text)
    if value <= 0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {value}")
    return value


def _expand_images(patterns) -> list:
    paths = []
    for pat in patterns:
        if any(ch in str(pat) for ch in "*?["):
            hits = sorted(_glob.glob(str(pat)))
            if not hits:
                raise ConfigInvalid(f"image pattern matched nothing: {pat}")
            paths.extend(Path(h) for h in hits)
        else:
            paths.append(Path(pat))
    return paths


def _mesh_from_volume(vol, iso, weld_epsilon):
    soup = marching_cubes(vol, iso)
    eps = default_weld_epsilon(vol.spacing) if weld_epsilon is None else weld_epsilon
    m = weld(soup, eps)
    return m.with_normals(compute_normals(m))


def _print_mesh_summary(m: IndexedMesh) -> None:
    labeling = connected_components(m)
    print(f"vertices {m.vertex_count}")
    print(f"faces {m.face_count}")
    print(f"components {labeling.count}")


def cmd_mesh(args) -> int:
    if (args.images is None) == (args.volume is None):
        raise ConfigInvalid("need exactly one of --images or --volume")
    if args.volume is not None:
        if args.pitch is not None or args.thickness is not None:
            raise ConfigInvalid("--pitch/--thickness come from the volume file")
        vol = load_volume(args.volume)
    else:
        if args.pitch is None or args.thickness is None:
            raise ConfigInvalid("--images needs --pitch and --thickness")
        vol = load_stack(_expand_images(args.images), args.pitch, args.thickness, args.channel)

    if args.z_factor > 1:
        vol = interpolate_z(vol, args.z_factor)
    if args.close_radius > 0:
        vol = apply_filter(vol, FilterSpec.close(args.close_radius))
    if args.blur_sigma > 0:
        vol = apply_filter(vol, FilterSpec.blur(args.blur_sigma))
    if args.save_volume:
        save_volume(vol, args.save_volume)

    m = _mesh_from_volume(vol, args.iso, args.weld_epsilon)
    save_mesh(m, args.out)
    _print_mesh_summary(m)
    return 0


def cmd_sdf(args) -> int:
    m = load_mesh(args.mesh)
    if m.normals is None:
        m = m.with_normals(compute_normals(m))
    field = shape_diameter(m, rays=args.rays, cone_half_angle_deg=args.cone, seed=args.seed)
    positive = field.values[field.values > 0]
    if positive.size == 0 and (args.lo is None or args.hi is None):
        print("warning: no interior hits; values are all zero, mesh left uncoloured", file=sys.stderr)
        save_mesh(m, args.out)
        return 0
    colors = sdf_to_colors(field, lo=args.lo, hi=args.hi)
    save_mesh(m.with_colors(colors), args.out)
    for p in PERCENTILES:
        print(f"p{p} {np.percentile(field.values, p):.4f}")
    return 0


def cmd_components(args) -> int:
    m = load_mesh(args.mesh)
    labeling = connected_components(m)
    colored = color_components(m, labeling)
    save_mesh(colored, args.out)
    print(f"components {labeling.count}")
    for label in range(labeling.count):
        print(f"component {label} vertices {int(labeling.sizes[label])}")
    return 0


def cmd_synth(args) -> int:
    radii = args.radii if args.radii else (args.radius,)
    spec = SyntheticSpec(
        kind=args.kind,
        count=args.count,
        radii_um=tuple(radii),
        dims=tuple(args.dims),
        spacing=tuple(args.spacing),
        gap_um=args.gap,
        noise_amplitude=args.noise,
        seed=args.seed,
    )
    out = Path(args.out)
    if out.suffix == ".hvol":
        save_volume(synth_volume(spec), out)
        print(f"volume {out}")
    elif out.suffix == ".ply":
        m = synth_mesh(spec)
        save_mesh(m, out)
        _print_mesh_summary(m)
    else:
        raise ConfigInvalid(f"--out must end in .hvol or .ply, got {out.name}")
    return 0


def cmd_serve(args) -> int:
    serve(args.config, bind=args.bind, log_level=args.log_level, ui_dir=args.ui_dir)
    return 0


def cmd_export(args) -> int:
    state = ProjectState(ProjectConfig.load(args.config))
    state.export_colored(args.mesh, args.out)
    print(f"exported {args.mesh} to {args.out}")
    return 0


def _apply_config_defaults(parser, sub, argv):
    """Fold JSON config values in as subcommand defaults; flags still win."""
    if not argv or argv[0] not in sub.choices:
        return
    name = argv[0]
    probe = argparse.ArgumentParser(add_help=False)
    probe.add_argument("--config")
    known, _ = probe.parse_known_args(argv[1:])
    if not known.config or name in ("serve", "export"):
        return
    try:
        raw = json.loads(Path(known.config).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigInvalid(f"{known.config}: {exc}")
    except json.JSONDecodeError as exc:
        raise ConfigInvalid(f"{known.config}: not valid JSON ({exc})")
    if not isinstance(raw, dict):
        raise ConfigInvalid(f"{known.config}: top level must be an object")
    target = sub.choices[name]
    valid = {a.dest for a in target._actions}
    defaults = {}
    for key, value in raw.items():
        dest = key.replace("-", "_")
        if dest not in valid:
            raise ConfigInvalid(f"{known.config}: unknown option {key!r} for {name}")
        defaults[dest] = value
    target.set_defaults(**defaults)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="histoscope",
        description="Section stacks to inspectable meshes: build, colour, serve.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mesh", help="volume pipeline: stack, filter, isosurface, PLY out")
    p.add_argument("--config", help="JSON file of flag defaults")
    p.add_argument("--images", nargs="+", help="section images (paths or globs), in z order")
    p.add_argument("--volume", help="volume cache file from an earlier run")
    p.add_argument("--pitch", type=_pos_float, help="pixel pitch in um (with --images)")
    p.add_argument("--thickness", type=_pos_float, help="section thickness in um (with --images)")
    p.add_argument("--channel", default="luminance-inverted",
                   choices=("luminance-inverted", "r", "g", "b"))
    p.add_argument("--z-factor", type=_pos_int, default=1,
                   help="z interpolation factor (1 = off)")
    p.add_argument("--close-radius", type=_nonneg_int, default=0,
                   help="morphological closing radius, voxels (0 = off)")
    p.add_argument("--blur-sigma", type=_nonneg_float, default=0.0,
                   help="gaussian blur sigma, voxels (0 = off)")
    p.add_argument("--iso", type=_iso, default=0.5, help="iso value in (0, 1)")
    p.add_argument("--weld-epsilon", type=_nonneg_float, default=None,
                   help="vertex weld tolerance, um (default from spacing)")
    p.add_argument("--save-volume", help="also write the filtered volume cache here")
    p.add_argument("--out", required=True, help="output PLY path")
    p.set_defaults(func=cmd_mesh)

    p = sub.add_parser("sdf", help="colour a mesh by local thickness, red to green")
    p.add_argument("--config", help="JSON file of flag defaults")
    p.add_argument("--mesh", required=True, help="input PLY")
    p.add_argument("--rays", type=_pos_int, default=30)
    p.add_argument("--cone", type=_pos_float, default=30.0, help="cone half-angle, degrees")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lo", type=float, default=None, help="ramp low end, um (default p5)")
    p.add_argument("--hi", type=float, default=None, help="ramp high end, um (default p95)")
    p.add_argument("--out", required=True, help="output PLY path")
    p.set_defaults(func=cmd_sdf)

    p = sub.add_parser("components", help="recolour connected components distinctly")
    p.add_argument("--config", help="JSON file of flag defaults")
    p.add_argument("--mesh", required=True, help="input PLY")
    p.add_argument("--out", required=True, help="output PLY path")
    p.set_defaults(func=cmd_components)

    p = sub.add_parser("synth", help="deterministic synthetic volumes and meshes")
    p.add_argument("--config", help="JSON file of flag defaults")
    p.add_argument("--kind", required=True, choices=sorted(KINDS))
    p.add_argument("--count", type=_pos_int, default=1)
    p.add_argument("--radius", type=_pos_float, default=5.0, help="single radius, um")
    p.add_argument("--radii", type=_pos_float, nargs="+", default=None,
                   help="per-object radii, um (cycled; overrides --radius)")
    p.add_argument("--gap", type=_pos_float, default=2.0,
                   help="tube surface clearance, um")
    p.add_argument("--dims", type=_pos_int, nargs=3, default=(64, 64, 64),
                   metavar=("NX", "NY", "NZ"))
    p.add_argument("--spacing", type=_pos_float, nargs=3, default=(1.0, 1.0, 1.0),
                   metavar=("SX", "SY", "SZ"))
    p.add_argument("--noise", type=_nonneg_float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help=".hvol for a volume, .ply for a mesh")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("serve", help="serve a project over HTTP")
    p.add_argument("--config", required=True, help="project JSON")
    p.add_argument("--bind", default=DEFAULT_BIND, help="HOST:PORT")
    p.add_argument("--log-level", default="info",
                   choices=("critical", "error", "warning", "info", "debug", "trace"))
    p.add_argument("--ui-dir", default=None, help="built viewer bundle to mount at /ui")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("export", help="write a mesh with its journalled colours")
    p.add_argument("--config", required=True, help="project JSON")
    p.add_argument("--mesh", required=True, help="mesh id from the project")
    p.add_argument("--out", required=True, help="output PLY path")
    p.set_defaults(func=cmd_export)

    return parser, sub


def main(argv=None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    parser, sub = build_parser()
    try:
        _apply_config_defaults(parser, sub, list(argv))
        args = parser.parse_args(argv)
        return args.func(args)
    except HistoscopeError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
