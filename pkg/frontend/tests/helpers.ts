// Shared test fixtures: a PLY writer matching the service's output format
// byte for byte, a deterministic RNG, and a fake manifest.

import type { ProjectManifest } from "../src/types.js";

export interface PlySpec {
  positions: number[][];
  normals?: number[][] | null;
  colors: number[][];
  faces: number[][];
}

export function makePly(spec: PlySpec): ArrayBuffer {
  const n = spec.positions.length;
  const hasNormals = spec.normals != null;
  const lines = [
    "ply",
    "format binary_little_endian 1.0",
    "comment histoscope mesh",
    `element vertex ${n}`,
    "property float x",
    "property float y",
    "property float z",
  ];
  if (hasNormals) lines.push("property float nx", "property float ny", "property float nz");
  lines.push(
    "property uchar red",
    "property uchar green",
    "property uchar blue",
    `element face ${spec.faces.length}`,
    "property list uchar int vertex_indices",
    "end_header",
  );
  const header = new TextEncoder().encode(lines.join("\n") + "\n");

  const stride = (hasNormals ? 6 : 3) * 4 + 3;
  const body = new Uint8Array(n * stride + spec.faces.length * 13);
  const view = new DataView(body.buffer);
  for (let i = 0; i < n; i++) {
    let at = i * stride;
    for (const c of spec.positions[i]) {
      view.setFloat32(at, c, true);
      at += 4;
    }
    if (hasNormals) {
      for (const c of spec.normals![i]) {
        view.setFloat32(at, c, true);
        at += 4;
      }
    }
    for (const c of spec.colors[i]) body[at++] = c;
  }
  let at = n * stride;
  for (const f of spec.faces) {
    body[at] = 3;
    view.setInt32(at + 1, f[0], true);
    view.setInt32(at + 5, f[1], true);
    view.setInt32(at + 9, f[2], true);
    at += 13;
  }

  const out = new Uint8Array(header.length + body.length);
  out.set(header, 0);
  out.set(body, header.length);
  return out.buffer;
}

/** Two triangles sharing an edge; default colour everywhere. */
export function tinyMesh(): ArrayBuffer {
  return makePly({
    positions: [
      [0, 0, 0],
      [1, 0, 0],
      [0, 1, 0],
      [1, 1, 0],
    ],
    normals: [
      [0, 0, 1],
      [0, 0, 1],
      [0, 0, 1],
      [0, 0, 1],
    ],
    colors: [
      [200, 200, 200],
      [200, 200, 200],
      [200, 200, 200],
      [200, 200, 200],
    ],
    faces: [
      [0, 1, 2],
      [2, 1, 3],
    ],
  });
}

/** Deterministic 32-bit generator (numerical recipes LCG). */
export function lcg(seed: number): () => number {
  let s = seed >>> 0;
  return () => {
    s = (Math.imul(1664525, s) + 1013904223) >>> 0;
    return s;
  };
}

export function fakeManifest(overrides: Partial<ProjectManifest> = {}): ProjectManifest {
  return {
    name: "fixture",
    meshes: [
      {
        id: "a",
        name: "Mesh A",
        digest: "0".repeat(64),
        vertex_count: 4,
        initially_visible: true,
      },
      {
        id: "b",
        name: "Mesh B",
        digest: "1".repeat(64),
        vertex_count: 4,
        initially_visible: false,
      },
    ],
    stack: {
      count: 8,
      pitch: 0.5,
      thickness: 7.0,
      origin: [0, 0, 0],
      width_px: 160,
      height_px: 120,
    },
    defaults: { clip_distance_m: 0.6, world_scale_m_per_mm: 10.0 },
    ...overrides,
  };
}
