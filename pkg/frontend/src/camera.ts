/**
 * Orbit navigation math, kept free of renderer types.
 *
 * The camera pose the rest of the viewer sees is a row-major 4x4
 * world-from-camera matrix (the same shape annotations store). The orbit
 * parameters are just a convenient factoring of such a pose: a target
 * point, a distance, and two angles. Up is -Y so section images keep
 * their on-screen orientation.
 */

import type { Mat4 } from "./state.js";

export interface Orbit {
  target: [number, number, number];
  distance: number;
  azimuth: number; // radians around the -Y axis
  elevation: number; // radians, positive looks down from above
}

const EL_MAX = 1.55; // keep clear of the poles
const UP: [number, number, number] = [0, -1, 0];

type Vec3 = [number, number, number];

function sub(a: Vec3, b: Vec3): Vec3 {
  return [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
}

function cross(a: Vec3, b: Vec3): Vec3 {
  return [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]];
}

function norm(a: Vec3): Vec3 {
  const n = Math.hypot(a[0], a[1], a[2]) || 1;
  return [a[0] / n, a[1] / n, a[2] / n];
}

export function clampOrbit(o: Orbit, minDistance: number): Orbit {
  return {
    ...o,
    distance: Math.max(minDistance, o.distance),
    elevation: Math.max(-EL_MAX, Math.min(EL_MAX, o.elevation)),
  };
}

/** Camera position implied by the orbit parameters. */
export function orbitEye(o: Orbit): Vec3 {
  const c = Math.cos(o.elevation);
  return [
    o.target[0] + o.distance * c * Math.sin(o.azimuth),
    o.target[1] - o.distance * Math.sin(o.elevation),
    o.target[2] + o.distance * c * Math.cos(o.azimuth),
  ];
}

/** Row-major world-from-camera matrix for the orbit pose. */
export function poseFromOrbit(o: Orbit): Mat4 {
  const eye = orbitEye(o);
  const zAxis = norm(sub(eye, o.target)); // camera looks along -z
  let xAxis = cross(UP, zAxis);
  if (Math.hypot(...xAxis) < 1e-9) xAxis = [1, 0, 0]; // looking straight along up
  xAxis = norm(xAxis);
  const yAxis = cross(zAxis, xAxis);
  return [
    [xAxis[0], yAxis[0], zAxis[0], eye[0]],
    [xAxis[1], yAxis[1], zAxis[1], eye[1]],
    [xAxis[2], yAxis[2], zAxis[2], eye[2]],
    [0, 0, 0, 1],
  ];
}

/**
 * Orbit parameters that continue navigation from an arbitrary pose, e.g.
 * after jumping to an annotation. Roll is not representable in an orbit
 * and is dropped at the next interaction; the restored pose itself is
 * rendered verbatim until then.
 */
export function orbitFromPose(pose: Mat4, distance: number): Orbit {
  const zAxis: Vec3 = norm([pose[0][2], pose[1][2], pose[2][2]]);
  const eye: Vec3 = [pose[0][3], pose[1][3], pose[2][3]];
  const target: Vec3 = [
    eye[0] - zAxis[0] * distance,
    eye[1] - zAxis[1] * distance,
    eye[2] - zAxis[2] * distance,
  ];
  const elevation = Math.asin(Math.max(-1, Math.min(1, -zAxis[1])));
  const azimuth = Math.atan2(zAxis[0], zAxis[2]);
  return { target, distance, azimuth, elevation };
}

/** Shift the target within the current view plane (screen-space pan). */
export function panOrbit(o: Orbit, dxWorld: number, dyWorld: number): Orbit {
  const pose = poseFromOrbit(o);
  const target: Vec3 = [
    o.target[0] - pose[0][0] * dxWorld + pose[0][1] * dyWorld,
    o.target[1] - pose[1][0] * dxWorld + pose[1][1] * dyWorld,
    o.target[2] - pose[2][0] * dxWorld + pose[2][1] * dyWorld,
  ];
  return { ...o, target };
}

/** Fit the orbit to an axis-aligned bounding box. */
export function orbitForBounds(min: Vec3, max: Vec3): Orbit {
  const target: Vec3 = [(min[0] + max[0]) / 2, (min[1] + max[1]) / 2, (min[2] + max[2]) / 2];
  const diag = Math.hypot(max[0] - min[0], max[1] - min[1], max[2] - min[2]) || 1;
  return { target, distance: diag * 1.6, azimuth: 0.5, elevation: 0.45 };
}
