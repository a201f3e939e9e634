// Wire types for the inspection service API. Field names mirror the JSON
// the server produces; keep them snake_case so payloads need no mapping.

export interface MeshEntry {
  id: string;
  name: string;
  digest: string;
  vertex_count: number;
  initially_visible: boolean;
}

export interface StackInfo {
  count: number;
  pitch: number;
  thickness: number;
  origin: [number, number, number];
  width_px: number;
  height_px: number;
}

export interface ProjectDefaults {
  clip_distance_m: number;
  world_scale_m_per_mm: number;
}

export interface ProjectManifest {
  name: string;
  meshes: MeshEntry[];
  stack: StackInfo;
  defaults: ProjectDefaults;
}

export interface PaintRequest {
  mesh_id: string;
  seed_point: [number, number, number];
  tool_radius_um: number;
  color: [number, number, number];
  geodesic_factor?: number;
  author?: string;
}

export interface PaintResponse {
  painted_count: number;
  journal_seq: number;
  painted: number[];
}

export interface AnnotationRequest {
  position: [number, number, number];
  radius_um: number;
  label: string;
  color: [number, number, number];
  view_transform: number[][];
  author?: string;
}

export interface AnnotationRecord {
  id: number;
  position: [number, number, number];
  radius_um: number;
  label: string;
  color: [number, number, number];
  view_transform: number[][];
  section_index: number;
  created_at: string;
  author: string;
}
