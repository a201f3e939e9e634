/**
 * Reader for the binary little-endian PLY flavour the service emits:
 * interleaved float32 x y z, optional float32 nx ny nz, uchar red green
 * blue per vertex, then uchar-counted int32 triangles.
 *
 * The original byte buffer is kept around and paint results are patched
 * into it in place. Because the server serialises meshes with a fixed
 * header and field order, the patched buffer is byte-identical to what
 * GET /api/export returns after the same operations, which is what the
 * digest comparison relies on.
 */

export interface VertexLayout {
  count: number;
  stride: number;
  dataStart: number; // byte offset of the first vertex record
  colorOffset: number; // offset of red within a record
  hasNormals: boolean;
}

export interface ParsedMesh {
  bytes: Uint8Array;
  layout: VertexLayout;
  positions: Float32Array; // 3 * count
  normals: Float32Array | null;
  colors: Uint8Array; // 3 * count, mirrors the buffer's color bytes
  indices: Uint32Array; // 3 * faceCount
}

export class MalformedPly extends Error {}

const VERTEX_PROPS_PLAIN = ["x", "y", "z", "red", "green", "blue"];
const VERTEX_PROPS_NORMALS = ["x", "y", "z", "nx", "ny", "nz", "red", "green", "blue"];

interface HeaderInfo {
  vertexCount: number;
  faceCount: number;
  vertexProps: string[];
  dataStart: number;
}

function parseHeader(bytes: Uint8Array): HeaderInfo {
  const probe = new TextDecoder("ascii").decode(bytes.subarray(0, 4096));
  const end = probe.indexOf("end_header\n");
  if (!probe.startsWith("ply\n") || end < 0) {
    throw new MalformedPly("missing ply magic or end_header");
  }
  const lines = probe.slice(0, end).split("\n");
  if (!lines.includes("format binary_little_endian 1.0")) {
    throw new MalformedPly("only binary_little_endian 1.0 is supported");
  }
  let vertexCount = -1;
  let faceCount = -1;
  let current = "";
  const vertexProps: string[] = [];
  for (const line of lines) {
    const parts = line.trim().split(/\s+/);
    if (parts[0] === "element") {
      current = parts[1];
      const n = Number(parts[2]);
      if (current === "vertex") vertexCount = n;
      else if (current === "face") faceCount = n;
      else throw new MalformedPly(`unsupported element ${current}`);
    } else if (parts[0] === "property" && current === "vertex") {
      if (parts[1] !== "float" && parts[1] !== "uchar") {
        throw new MalformedPly(`unsupported vertex property type ${parts[1]}`);
      }
      vertexProps.push(parts[parts.length - 1]);
    } else if (parts[0] === "property" && current === "face") {
      if (line.trim() !== "property list uchar int vertex_indices") {
        throw new MalformedPly(`unsupported face property ${line.trim()}`);
      }
    }
  }
  if (vertexCount < 0 || faceCount < 0) {
    throw new MalformedPly("vertex or face element missing");
  }
  return { vertexCount, faceCount, vertexProps, dataStart: end + "end_header\n".length };
}

function sameProps(a: string[], b: string[]): boolean {
  return a.length === b.length && a.every((p, i) => p === b[i]);
}

export function parseMeshPly(buf: ArrayBuffer): ParsedMesh {
  const bytes = new Uint8Array(buf);
  const h = parseHeader(bytes);

  let hasNormals: boolean;
  if (sameProps(h.vertexProps, VERTEX_PROPS_NORMALS)) hasNormals = true;
  else if (sameProps(h.vertexProps, VERTEX_PROPS_PLAIN)) hasNormals = false;
  else throw new MalformedPly(`unexpected vertex layout ${h.vertexProps.join(",")}`);

  const floats = hasNormals ? 6 : 3;
  const stride = floats * 4 + 3;
  const layout: VertexLayout = {
    count: h.vertexCount,
    stride,
    dataStart: h.dataStart,
    colorOffset: floats * 4,
    hasNormals,
  };

  const need = h.dataStart + h.vertexCount * stride + h.faceCount * 13;
  if (bytes.byteLength < need) {
    throw new MalformedPly(`buffer too short: ${bytes.byteLength} < ${need}`);
  }

  const view = new DataView(buf);
  const positions = new Float32Array(3 * h.vertexCount);
  const normals = hasNormals ? new Float32Array(3 * h.vertexCount) : null;
  const colors = new Uint8Array(3 * h.vertexCount);
  for (let i = 0; i < h.vertexCount; i++) {
    const base = h.dataStart + i * stride;
    positions[3 * i] = view.getFloat32(base, true);
    positions[3 * i + 1] = view.getFloat32(base + 4, true);
    positions[3 * i + 2] = view.getFloat32(base + 8, true);
    if (normals) {
      normals[3 * i] = view.getFloat32(base + 12, true);
      normals[3 * i + 1] = view.getFloat32(base + 16, true);
      normals[3 * i + 2] = view.getFloat32(base + 20, true);
    }
    colors[3 * i] = bytes[base + layout.colorOffset];
    colors[3 * i + 1] = bytes[base + layout.colorOffset + 1];
    colors[3 * i + 2] = bytes[base + layout.colorOffset + 2];
  }

  const indices = new Uint32Array(3 * h.faceCount);
  let off = h.dataStart + h.vertexCount * stride;
  for (let f = 0; f < h.faceCount; f++) {
    const n = view.getUint8(off);
    if (n !== 3) throw new MalformedPly(`face ${f} has ${n} vertices, want 3`);
    indices[3 * f] = view.getInt32(off + 1, true);
    indices[3 * f + 1] = view.getInt32(off + 5, true);
    indices[3 * f + 2] = view.getInt32(off + 9, true);
    off += 13;
  }

  return { bytes, layout, positions, normals, colors, indices };
}

/** Recolour the given vertices in both the raw buffer and the GPU mirror. */
export function patchColors(
  mesh: ParsedMesh,
  indices: ArrayLike<number>,
  rgb: [number, number, number],
): void {
  const { bytes, layout, colors } = mesh;
  for (let k = 0; k < indices.length; k++) {
    const i = indices[k];
    if (i < 0 || i >= layout.count) continue; // foreign index, ignore
    const at = layout.dataStart + i * layout.stride + layout.colorOffset;
    bytes[at] = rgb[0];
    bytes[at + 1] = rgb[1];
    bytes[at + 2] = rgb[2];
    colors[3 * i] = rgb[0];
    colors[3 * i + 1] = rgb[1];
    colors[3 * i + 2] = rgb[2];
  }
}

/** Hex SHA-256 of a byte buffer; matches the server's mesh digests. */
export async function sha256Hex(bytes: Uint8Array): Promise<string> {
  const copy = bytes.slice(); // detached view keeps subtle.digest happy
  const digest = await crypto.subtle.digest("SHA-256", copy);
  return Array.from(new Uint8Array(digest), (b) => b.toString(16).padStart(2, "0")).join("");
}
