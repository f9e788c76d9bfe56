import type { CameraPose } from "./types.js";

export interface Orbit {
  target: [number, number, number];
  yaw: number; // radians around world +Y
  pitch: number; // radians above the horizon (positive looks down)
  radius: number;
}

type Vec3 = [number, number, number];

function sub(a: Vec3, b: Vec3): Vec3 {
  return [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
}

function cross(a: Vec3, b: Vec3): Vec3 {
  return [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]];
}

function normalize(a: Vec3): Vec3 {
  const n = Math.hypot(a[0], a[1], a[2]) || 1;
  return [a[0] / n, a[1] / n, a[2] / n];
}

export function orbitPosition(o: Orbit): Vec3 {
  const cp = Math.cos(o.pitch);
  return [
    o.target[0] + o.radius * cp * Math.sin(o.yaw),
    o.target[1] + o.radius * Math.sin(o.pitch),
    o.target[2] - o.radius * cp * Math.cos(o.yaw),
  ];
}

/**
 * Full camera pose for an orbit, matching the engine's convention:
 * x-right / y-down / +z-forward, world +Y up. Intrinsics are kept from the
 * session's base camera so only the rigid pose changes.
 */
export function orbitPose(o: Orbit, base: CameraPose): CameraPose {
  const pos = orbitPosition(o);
  const forward = normalize(sub(o.target, pos));
  let right = cross(forward, [0, 1, 0]);
  if (Math.hypot(...right) < 1e-9) right = [1, 0, 0]; // looking straight up/down
  right = normalize(right);
  const down = cross(forward, right);
  const m = [
    [right[0], down[0], forward[0], pos[0]],
    [right[1], down[1], forward[1], pos[1]],
    [right[2], down[2], forward[2], pos[2]],
    [0, 0, 0, 1],
  ];
  return { ...base, world_from_camera: m };
}

/** Pose is rigid when its rotation block is orthonormal with det +1. */
export function isRigid(m: number[][], tol = 1e-6): boolean {
  const r = [
    [m[0][0], m[0][1], m[0][2]],
    [m[1][0], m[1][1], m[1][2]],
    [m[2][0], m[2][1], m[2][2]],
  ];
  for (let i = 0; i < 3; i++) {
    for (let j = 0; j < 3; j++) {
      let dot = 0;
      for (let k = 0; k < 3; k++) dot += r[k][i] * r[k][j];
      if (Math.abs(dot - (i === j ? 1 : 0)) > tol) return false;
    }
  }
  const det =
    r[0][0] * (r[1][1] * r[2][2] - r[1][2] * r[2][1]) -
    r[0][1] * (r[1][0] * r[2][2] - r[1][2] * r[2][0]) +
    r[0][2] * (r[1][0] * r[2][1] - r[1][1] * r[2][0]);
  return Math.abs(det - 1) < 1e-5;
}
