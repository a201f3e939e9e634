/**
 * Viewer state and its transition rules.
 *
 * Every UI interaction is reduced to a plain event and folded into the
 * state by `reduce`, a pure function. The rules are deliberately boring:
 *
 *   - clip distance clamps to at least the minimal near plane,
 *   - opacities clamp to [0, 1],
 *   - the section index clamps to [0, count-1], stepping included,
 *   - switching to the already-active tool (or any other no-op event)
 *     returns the input state object unchanged, reference-equal,
 *   - events carrying non-finite numbers or unknown mesh ids are no-ops.
 *
 * Reference equality on no-ops is part of the contract: callers use it to
 * skip redraws, and tests use it to pin down the identity cases.
 */

import type { ProjectManifest } from "./types.js";

export type Tool = "navigate" | "annotate" | "paint";
export type Background = "light" | "dark";
export type Mat4 = number[][]; // 4 rows of 4, row-major, world-from-camera
export type Rgb = [number, number, number];

/** Smallest allowed near plane, in world metres. */
export const NEAR_MIN_M = 0.01;

/** Smallest allowed tool radius, in micrometres. */
export const TOOL_RADIUS_MIN_UM = 0.1;

export interface ViewerState {
  pose: Mat4;
  visible: ReadonlySet<string>;
  meshOpacity: Readonly<Record<string, number>>;
  sectionIndex: number;
  sectionOpacity: number;
  sectionFrontFaceCulling: boolean;
  clipDistance: number; // world metres
  tool: Tool;
  toolRadius: number; // micrometres
  toolColor: Rgb;
  background: Background;
}

/** Bounds the reducer clamps against; fixed for a loaded project. */
export interface Limits {
  sectionCount: number;
  nearMin: number;
  meshIds: ReadonlySet<string>;
}

export type ViewerEvent =
  | { type: "set-pose"; pose: Mat4 }
  | { type: "set-mesh-visible"; id: string; visible: boolean }
  | { type: "set-mesh-opacity"; id: string; value: number }
  | { type: "set-section-index"; index: number }
  | { type: "step-section"; delta: number }
  | { type: "set-section-opacity"; value: number }
  | { type: "set-front-face-culling"; value: boolean }
  | { type: "set-clip"; value: number }
  | { type: "adjust-clip"; delta: number }
  | { type: "set-tool"; tool: Tool }
  | { type: "set-tool-radius"; value: number }
  | { type: "set-tool-color"; color: Rgb }
  | { type: "set-background"; value: Background }
  | { type: "go-to-annotation"; pose: Mat4; sectionIndex: number };

export function identityPose(): Mat4 {
  return [
    [1, 0, 0, 0],
    [0, 1, 0, 0],
    [0, 0, 1, 0],
    [0, 0, 0, 1],
  ];
}

export function clonePose(pose: Mat4): Mat4 {
  return pose.map((row) => row.slice());
}

export function limitsFrom(manifest: ProjectManifest): Limits {
  return {
    sectionCount: manifest.stack.count,
    nearMin: NEAR_MIN_M,
    meshIds: new Set(manifest.meshes.map((m) => m.id)),
  };
}

export function initialState(manifest: ProjectManifest, limits: Limits): ViewerState {
  const meshOpacity: Record<string, number> = {};
  const visible = new Set<string>();
  for (const m of manifest.meshes) {
    meshOpacity[m.id] = 1;
    if (m.initially_visible) visible.add(m.id);
  }
  return {
    pose: identityPose(),
    visible,
    meshOpacity,
    sectionIndex: 0,
    sectionOpacity: 1,
    sectionFrontFaceCulling: false,
    clipDistance: Math.max(limits.nearMin, manifest.defaults.clip_distance_m),
    tool: "navigate",
    toolRadius: 5,
    toolColor: [230, 90, 40],
    background: "dark",
  };
}

function clamp01(v: number): number {
  return Math.min(1, Math.max(0, v));
}

function clampSection(index: number, count: number): number {
  return Math.max(0, Math.min(Math.trunc(index), count - 1));
}

function finite(v: number): boolean {
  return Number.isFinite(v);
}

export function reduce(state: ViewerState, event: ViewerEvent, limits: Limits): ViewerState {
  switch (event.type) {
    case "set-pose":
      return { ...state, pose: clonePose(event.pose) };

    case "set-mesh-visible": {
      if (!limits.meshIds.has(event.id)) return state;
      if (state.visible.has(event.id) === event.visible) return state;
      const visible = new Set(state.visible);
      if (event.visible) visible.add(event.id);
      else visible.delete(event.id);
      return { ...state, visible };
    }

    case "set-mesh-opacity": {
      if (!limits.meshIds.has(event.id) || !finite(event.value)) return state;
      const value = clamp01(event.value);
      if (state.meshOpacity[event.id] === value) return state;
      return { ...state, meshOpacity: { ...state.meshOpacity, [event.id]: value } };
    }

    case "set-section-index": {
      if (!finite(event.index)) return state;
      const index = clampSection(event.index, limits.sectionCount);
      return index === state.sectionIndex ? state : { ...state, sectionIndex: index };
    }

    case "step-section": {
      if (!finite(event.delta)) return state;
      const index = clampSection(state.sectionIndex + Math.trunc(event.delta), limits.sectionCount);
      return index === state.sectionIndex ? state : { ...state, sectionIndex: index };
    }

    case "set-section-opacity": {
      if (!finite(event.value)) return state;
      const value = clamp01(event.value);
      return value === state.sectionOpacity ? state : { ...state, sectionOpacity: value };
    }

    case "set-front-face-culling":
      return event.value === state.sectionFrontFaceCulling
        ? state
        : { ...state, sectionFrontFaceCulling: event.value };

    case "set-clip": {
      if (!finite(event.value)) return state;
      const value = Math.max(limits.nearMin, event.value);
      return value === state.clipDistance ? state : { ...state, clipDistance: value };
    }

    case "adjust-clip": {
      if (!finite(event.delta)) return state;
      const value = Math.max(limits.nearMin, state.clipDistance + event.delta);
      return value === state.clipDistance ? state : { ...state, clipDistance: value };
    }

    case "set-tool":
      return event.tool === state.tool ? state : { ...state, tool: event.tool };

    case "set-tool-radius": {
      if (!finite(event.value)) return state;
      const value = Math.max(TOOL_RADIUS_MIN_UM, event.value);
      return value === state.toolRadius ? state : { ...state, toolRadius: value };
    }

    case "set-tool-color": {
      if (!event.color.every(finite)) return state;
      const color = event.color.map((c) => Math.max(0, Math.min(255, Math.round(c)))) as Rgb;
      if (color.every((c, i) => c === state.toolColor[i])) return state;
      return { ...state, toolColor: color };
    }

    case "set-background":
      return event.value === state.background ? state : { ...state, background: event.value };

    // Restores the stored camera pose verbatim (no arithmetic, so the
    // matrix survives bit-exact) and jumps to the stored section.
    case "go-to-annotation": {
      const index = clampSection(event.sectionIndex, limits.sectionCount);
      return { ...state, pose: clonePose(event.pose), sectionIndex: index };
    }
  }
}
