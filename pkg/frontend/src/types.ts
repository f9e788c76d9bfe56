export interface CameraPose {
  fx: number;
  fy: number;
  cx: number;
  cy: number;
  width: number;
  height: number;
  world_from_camera: number[][];
  near: number;
  far: number;
}

export interface ServiceState {
  revision: number;
  num_gaussians: number;
  groups: string[];
  settings: Record<string, number | boolean | string>;
  environment: { path: string | null; constant: number[] | null; yaw: number };
  camera: CameraPose;
  channels: string[];
}

export type ChannelName =
  | "final"
  | "albedo"
  | "normal"
  | "depth"
  | "roughness"
  | "metallic"
  | "gamma"
  | "alpha"
  | "hitmask";

export type ConnectionStatus = "connecting" | "connected" | "disconnected";

export interface Frame {
  revision: number;
  png: Uint8Array;
}

// engine-side value ranges for the editor controls
export const SLIDER_RANGES = {
  roughness: { min: 0, max: 1, step: 0.01 },
  metallic: { min: 0, max: 1, step: 0.01 },
  exposure: { min: 0.05, max: 4, step: 0.05 },
  n_samples: { min: 1, max: 64, step: 1 },
  step_size: { min: 0.01, max: 0.2, step: 0.005 },
  yaw: { min: 0, max: 2 * Math.PI, step: 0.01 },
} as const;

export type SliderKey = keyof typeof SLIDER_RANGES;

export function clampToRange(key: SliderKey, value: number): number {
  const r = SLIDER_RANGES[key];
  return Math.min(r.max, Math.max(r.min, value));
}
