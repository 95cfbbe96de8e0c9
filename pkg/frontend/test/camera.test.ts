import { describe, expect, it } from "vitest";

import { OrbitCamera, projectPoints } from "../src/camera";

describe("OrbitCamera", () => {
  it("keeps the eye at the configured distance from the target", () => {
    const cam = new OrbitCamera();
    cam.target = [1, 2, 3];
    cam.distance = 5;
    const eye = cam.eye();
    const d = Math.hypot(eye[0] - 1, eye[1] - 2, eye[2] - 3);
    expect(d).toBeCloseTo(5, 10);
  });

  it("frame() centers the target on the bounding box", () => {
    const cam = new OrbitCamera();
    cam.frame([0, -1, 1], [2, 1, 3]);
    expect(cam.target).toEqual([1, 0, 2]);
    expect(cam.distance).toBeGreaterThan(0);
  });

  it("zoom clamps to sane bounds", () => {
    const cam = new OrbitCamera();
    cam.zoom(-1e9);
    expect(cam.distance).toBeGreaterThanOrEqual(0.2);
    cam.zoom(1e9);
    expect(cam.distance).toBeLessThanOrEqual(60);
  });
});

describe("projectPoints", () => {
  it("projects the look-at target to the viewport center", () => {
    const cam = new OrbitCamera();
    cam.target = [0.5, -0.25, 1.0];
    const vp = cam.viewProjection(800, 600);
    const out = new Float32Array(2);
    projectPoints(new Float32Array(cam.target), 1, vp, 800, 600, out);
    expect(out[0]).toBeCloseTo(400, 3);
    expect(out[1]).toBeCloseTo(300, 3);
  });

  it("marks points behind the camera as NaN", () => {
    const cam = new OrbitCamera();
    cam.target = [0, 0, 0];
    cam.distance = 2;
    const eye = cam.eye();
    // a point well behind the eye along the view direction
    const behind = [eye[0] * 2, eye[1] * 2, eye[2] * 2];
    const out = new Float32Array(4);
    const vp = cam.viewProjection(640, 480);
    projectPoints(new Float32Array([...behind, 0, 0, 0]), 2, vp, 640, 480, out);
    expect(Number.isNaN(out[0])).toBe(true);
    expect(Number.isNaN(out[2])).toBe(false);
  });

  it("separates left and right points horizontally", () => {
    const cam = new OrbitCamera();
    cam.yaw = 0;
    cam.pitch = 0;
    cam.target = [0, 0, 0];
    cam.distance = 3; // eye on +z looking at origin, up = +x
    const vp = cam.viewProjection(800, 600);
    const out = new Float32Array(4);
    // with up=+x and view along -z, +y maps to screen-left
    projectPoints(new Float32Array([0, 1, 0, 0, -1, 0]), 2, vp, 800, 600, out);
    expect(out[0]).toBeLessThan(400);
    expect(out[2]).toBeGreaterThan(400);
  });
});
