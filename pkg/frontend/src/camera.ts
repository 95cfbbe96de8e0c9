/**
 * Orbit camera and the minimal 4x4 matrix math the renderer and the lasso
 * picker share. Matrices are column-major Float32Array(16), matching WebGL.
 */

export type Mat4 = Float32Array;

export function perspective(fovYRad: number, aspect: number, near: number, far: number): Mat4 {
  const f = 1.0 / Math.tan(fovYRad / 2);
  const out = new Float32Array(16);
  out[0] = f / aspect;
  out[5] = f;
  out[10] = (far + near) / (near - far);
  out[11] = -1;
  out[14] = (2 * far * near) / (near - far);
  return out;
}

export function lookAt(eye: number[], target: number[], up: number[]): Mat4 {
  const z = normalize([eye[0] - target[0], eye[1] - target[1], eye[2] - target[2]]);
  const x = normalize(cross(up, z));
  const y = cross(z, x);
  const out = new Float32Array(16);
  out[0] = x[0];
  out[1] = y[0];
  out[2] = z[0];
  out[4] = x[1];
  out[5] = y[1];
  out[6] = z[1];
  out[8] = x[2];
  out[9] = y[2];
  out[10] = z[2];
  out[12] = -dot(x, eye);
  out[13] = -dot(y, eye);
  out[14] = -dot(z, eye);
  out[15] = 1;
  return out;
}

export function multiply(a: Mat4, b: Mat4): Mat4 {
  const out = new Float32Array(16);
  for (let col = 0; col < 4; col++) {
    for (let row = 0; row < 4; row++) {
      let sum = 0;
      for (let k = 0; k < 4; k++) sum += a[k * 4 + row] * b[col * 4 + k];
      out[col * 4 + row] = sum;
    }
  }
  return out;
}

function cross(a: number[], b: number[]): number[] {
  return [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]];
}

function dot(a: number[], b: number[]): number {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

function normalize(v: number[]): number[] {
  const n = Math.hypot(v[0], v[1], v[2]) || 1;
  return [v[0] / n, v[1] / n, v[2] / n];
}

/**
 * Orbit rig around a target point. The cloud's up axis is x (camera-frame
 * height), so the rig works in that convention by default.
 */
export class OrbitCamera {
  yaw = 0.3;
  pitch = 0.25;
  distance = 4;
  target: number[] = [0, 0, 0];
  fovY = (55 * Math.PI) / 180;
  near = 0.01;
  far = 100;

  constructor(readonly upAxis: number[] = [1, 0, 0]) {}

  eye(): number[] {
    // spherical offset in the plane orthogonal to upAxis
    const cp = Math.cos(this.pitch);
    const offset = [
      Math.sin(this.pitch),
      cp * Math.sin(this.yaw),
      cp * Math.cos(this.yaw),
    ];
    return [
      this.target[0] + this.distance * offset[0],
      this.target[1] + this.distance * offset[1],
      this.target[2] + this.distance * offset[2],
    ];
  }

  viewProjection(width: number, height: number): Mat4 {
    const proj = perspective(this.fovY, width / Math.max(height, 1), this.near, this.far);
    const view = lookAt(this.eye(), this.target, this.upAxis);
    return multiply(proj, view);
  }

  rotate(dxPixels: number, dyPixels: number): void {
    this.yaw -= dxPixels * 0.008;
    this.pitch = Math.min(1.45, Math.max(-1.45, this.pitch + dyPixels * 0.008));
  }

  pan(dxPixels: number, dyPixels: number, height: number): void {
    const worldPerPixel = (2 * this.distance * Math.tan(this.fovY / 2)) / Math.max(height, 1);
    const eye = this.eye();
    const z = normalize([eye[0] - this.target[0], eye[1] - this.target[1], eye[2] - this.target[2]]);
    const x = normalize(cross(this.upAxis, z));
    const y = cross(z, x);
    for (let i = 0; i < 3; i++) {
      this.target[i] += (-dxPixels * x[i] + dyPixels * y[i]) * worldPerPixel;
    }
  }

  zoom(wheelDelta: number): void {
    this.distance = Math.min(60, Math.max(0.2, this.distance * Math.exp(wheelDelta * 0.001)));
  }

  /** Frame a bounding box: aim at its center, back off to fit the radius. */
  frame(min: number[], max: number[]): void {
    this.target = [(min[0] + max[0]) / 2, (min[1] + max[1]) / 2, (min[2] + max[2]) / 2];
    const radius =
      Math.hypot(max[0] - min[0], max[1] - min[1], max[2] - min[2]) / 2 || 1;
    this.distance = radius / Math.tan(this.fovY / 2) + radius * 0.25;
  }
}

/**
 * Project positions through a view-projection matrix to screen pixels.
 * Writes [x, y] per point into out; points with w <= 0 (behind the camera)
 * get NaN so pickers skip them.
 */
export function projectPoints(
  positions: Float32Array,
  count: number,
  viewProj: Mat4,
  width: number,
  height: number,
  out: Float32Array,
): void {
  const m = viewProj;
  for (let i = 0; i < count; i++) {
    const x = positions[3 * i];
    const y = positions[3 * i + 1];
    const z = positions[3 * i + 2];
    const clipW = m[3] * x + m[7] * y + m[11] * z + m[15];
    if (clipW <= 0) {
      out[2 * i] = NaN;
      out[2 * i + 1] = NaN;
      continue;
    }
    const clipX = m[0] * x + m[4] * y + m[8] * z + m[12];
    const clipY = m[1] * x + m[5] * y + m[9] * z + m[13];
    out[2 * i] = ((clipX / clipW + 1) / 2) * width;
    out[2 * i + 1] = ((1 - clipY / clipW) / 2) * height;
  }
}
