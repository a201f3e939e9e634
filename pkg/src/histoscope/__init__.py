"""histoscope: reconstruct, paint, and inspect meshes from serial-section
microscopy volumes.

The pipeline: load registered section images into a scalar Volume, reduce z
anisotropy by linear interpolation, clean with closing/blur filters, extract
an isosurface, weld it into an IndexedMesh, then analyse: connected-component
colouring, geodesic-bounded painting, shape-diameter colouring, annotation
markers, and an HTTP inspection service for the browser viewer.
"""

from .analytics import (
    Annotation,
    AnnotationStore,
    PaintJournal,
    PaintOperation,
    PaintResult,
    SdfField,
    geodesic_distances,
    geodesic_paint,
    journal_replay,
    nearest_vertex,
    place_annotation,
    sdf_to_colors,
    shape_diameter,
)
from .errors import HistoscopeError
from .isosurface import (
    RawTriangleSoup,
    compute_normals,
    default_weld_epsilon,
    marching_cubes,
    weld,
)
from .mesh import (
    ComponentLabeling,
    IndexedMesh,
    VertexAdjacency,
    build_adjacency,
    color_components,
    connected_components,
    golden_angle_palette,
)
from .ply import load_mesh, mesh_to_ply_bytes, save_mesh
from .project import ProjectConfig, ProjectState
from .sections import (
    SectionCuboid,
    SectionStack,
    cuboid_for,
    section_index_for,
    step_section,
)
from .synth import SyntheticSpec, synth_mesh, synth_volume, torus_mesh
from .volume import (
    FilterSpec,
    Volume,
    apply_filter,
    interpolate_z,
    load_stack,
    load_volume,
    save_volume,
)

__version__ = "0.1.0"

__all__ = [
    "Annotation",
    "AnnotationStore",
    "ComponentLabeling",
    "FilterSpec",
    "HistoscopeError",
    "IndexedMesh",
    "PaintJournal",
    "PaintOperation",
    "PaintResult",
    "ProjectConfig",
    "ProjectState",
    "RawTriangleSoup",
    "SdfField",
    "SectionCuboid",
    "SectionStack",
    "SyntheticSpec",
    "VertexAdjacency",
    "Volume",
    "apply_filter",
    "build_adjacency",
    "color_components",
    "compute_normals",
    "connected_components",
    "cuboid_for",
    "default_weld_epsilon",
    "geodesic_distances",
    "geodesic_paint",
    "golden_angle_palette",
    "interpolate_z",
    "journal_replay",
    "load_mesh",
    "load_stack",
    "load_volume",
    "marching_cubes",
    "mesh_to_ply_bytes",
    "nearest_vertex",
    "place_annotation",
    "save_mesh",
    "save_volume",
    "sdf_to_colors",
    "section_index_for",
    "shape_diameter",
    "step_section",
    "synth_mesh",
    "synth_volume",
    "torus_mesh",
    "weld",
]
