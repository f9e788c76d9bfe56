import { describe, expect, it } from "vitest";

import { isRigid, orbitPose, orbitPosition, type Orbit } from "../src/orbit.js";
import type { CameraPose } from "../src/types.js";

const BASE: CameraPose = {
  fx: 200, fy: 200, cx: 128, cy: 128, width: 256, height: 256,
  world_from_camera: [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]],
  near: 0.05, far: 60,
};

describe("orbit camera", () => {
  it("poses are rigid for a sweep of angles", () => {
    for (const yaw of [0, 0.7, 2.1, Math.PI, 5.5]) {
      for (const pitch of [-0.2, 0, 0.4, 1.2]) {
        const o: Orbit = { target: [0, 1, 2], yaw, pitch, radius: 5 };
        const pose = orbitPose(o, BASE);
        expect(isRigid(pose.world_from_camera)).toBe(true);
      }
    }
  });

  it("camera sits at the orbit radius and looks at the target", () => {
    const o: Orbit = { target: [1, 0.5, 2], yaw: 0.9, pitch: 0.3, radius: 4 };
    const pose = orbitPose(o, BASE);
    const m = pose.world_from_camera;
    const pos = [m[0][3], m[1][3], m[2][3]];
    const d = Math.hypot(pos[0] - 1, pos[1] - 0.5, pos[2] - 2);
    expect(d).toBeCloseTo(4, 10);
    // third column is the forward axis, pointing at the target
    const fwd = [m[0][2], m[1][2], m[2][2]];
    const toTarget = [1 - pos[0], 0.5 - pos[1], 2 - pos[2]].map((v) => v / d);
    expect(fwd[0]).toBeCloseTo(toTarget[0], 10);
    expect(fwd[1]).toBeCloseTo(toTarget[1], 10);
    expect(fwd[2]).toBeCloseTo(toTarget[2], 10);
  });

  it("screen-down axis has a non-negative world-down component", () => {
    const o: Orbit = { target: [0, 0, 0], yaw: 1.1, pitch: 0.5, radius: 3 };
    const m = orbitPose(o, BASE).world_from_camera;
    expect(m[1][1]).toBeLessThanOrEqual(0); // y_cam maps against world +Y
  });

  it("intrinsics pass through unchanged", () => {
    const pose = orbitPose({ target: [0, 0, 0], yaw: 0, pitch: 0.1, radius: 2 }, BASE);
    expect(pose.fx).toBe(BASE.fx);
    expect(pose.width).toBe(BASE.width);
  });

  it("position moves smoothly with yaw", () => {
    const a = orbitPosition({ target: [0, 0, 0], yaw: 0.0, pitch: 0.2, radius: 5 });
    const b = orbitPosition({ target: [0, 0, 0], yaw: 0.01, pitch: 0.2, radius: 5 });
    expect(Math.hypot(a[0] - b[0], a[1] - b[1], a[2] - b[2])).toBeLessThan(0.1);
  });
});
