import numpy as np
import pytest

from histoscope import (
    IndexedMesh,
    SyntheticSpec,
    Volume,
    compute_normals,
    default_weld_epsilon,
    marching_cubes,
    synth_mesh,
    weld,
)


def sphere_volume(dims=(64, 64, 64), radius_vox=20, spacing=(1.0, 1.0, 1.0)):
    """Smooth radial ramp crossing 0.5 exactly at the given radius."""
    nz, ny, nx = dims[2], dims[1], dims[0]
    cx = (nx - 1) / 2.0 * spacing[0]
    cy = (ny - 1) / 2.0 * spacing[1]
    cz = (nz - 1) / 2.0 * spacing[2]
    x = np.arange(nx) * spacing[0]
    y = np.arange(ny) * spacing[1]
    z = np.arange(nz) * spacing[2]
    r = np.sqrt(
        (x[None, None, :] - cx) ** 2
        + (y[None, :, None] - cy) ** 2
        + (z[:, None, None] - cz) ** 2
    )
    w = min(spacing)
    field = np.clip(0.5 + (radius_vox * min(spacing) - r) / (2.0 * w), 0.0, 1.0)
    return Volume(field.astype(np.float32), spacing, provenance="test sphere")


def mesh_of(volume, iso=0.5):
    soup = marching_cubes(volume, iso)
    m = weld(soup, default_weld_epsilon(volume.spacing))
    return m.with_normals(compute_normals(m))


@pytest.fixture(scope="session")
def sphere_vol():
    return sphere_volume()


@pytest.fixture(scope="session")
def sphere_mesh(sphere_vol):
    return mesh_of(sphere_vol)


@pytest.fixture(scope="session")
def tubes_mesh():
    # two tubes whose facing surfaces are exactly 1 um apart
    spec = SyntheticSpec(
        kind="tubes", count=2, radii_um=(5.0,), dims=(80, 64, 64), gap_um=1.0
    )
    return synth_mesh(spec)


@pytest.fixture(scope="session")
def octa_mesh():
    vol = np.zeros((3, 3, 3), dtype=np.float32)
    vol[1, 1, 1] = 1.0
    v = Volume(vol, (1.0, 1.0, 1.0), provenance="single interior voxel")
    return mesh_of(v)


def two_triangle_strip():
    """Two triangles sharing an edge; positions float32."""
    positions = np.array(
        [[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0]], dtype=np.float32
    )
    faces = np.array([[0, 1, 2], [1, 3, 2]], dtype=np.int32)
    return IndexedMesh(positions=positions, faces=faces)
