import type { Mat4 } from "./camera";

const VERTEX_SRC = `
attribute vec3 position;
attribute vec3 color;
uniform mat4 viewProj;
uniform float pointSize;
varying vec3 vColor;
void main() {
  gl_Position = viewProj * vec4(position, 1.0);
  gl_PointSize = pointSize;
  vColor = color;
}
`;

const FRAGMENT_SRC = `
precision mediump float;
varying vec3 vColor;
void main() {
  vec2 d = gl_PointCoord - vec2(0.5);
  if (dot(d, d) > 0.25) discard;
  gl_FragColor = vec4(vColor, 1.0);
}
`;

function compile(gl: WebGLRenderingContext, kind: number, src: string): WebGLShader {
  const shader = gl.createShader(kind);
  if (!shader) throw new Error("shader allocation failed");
  gl.shaderSource(shader, src);
  gl.compileShader(shader);
  if (!gl.getShaderParameter(shader, gl.COMPILE_STATUS)) {
    throw new Error(gl.getShaderInfoLog(shader) ?? "shader compile failed");
  }
  return shader;
}

/**
 * Two-pass point renderer: a halo pass (selection ring + class color
 * overlays, drawn larger) underneath the true-color pass, so the
 * annotator always judges the real colors.
 */
export class PointRenderer {
  private gl: WebGLRenderingContext;
  private program: WebGLProgram;
  private positionBuffer: WebGLBuffer;
  private colorBuffer: WebGLBuffer;
  private haloPositionBuffer: WebGLBuffer;
  private haloColorBuffer: WebGLBuffer;
  private count = 0;
  private haloCount = 0;
  private attribPosition: number;
  private attribColor: number;
  private uniformViewProj: WebGLUniformLocation;
  private uniformPointSize: WebGLUniformLocation;

  constructor(readonly canvas: HTMLCanvasElement) {
    const gl = canvas.getContext("webgl", { antialias: false });
    if (!gl) throw new Error("WebGL unavailable");
    this.gl = gl;
    this.program = gl.createProgram()!;
    gl.attachShader(this.program, compile(gl, gl.VERTEX_SHADER, VERTEX_SRC));
    gl.attachShader(this.program, compile(gl, gl.FRAGMENT_SHADER, FRAGMENT_SRC));
    gl.linkProgram(this.program);
    if (!gl.getProgramParameter(this.program, gl.LINK_STATUS)) {
      throw new Error(gl.getProgramInfoLog(this.program) ?? "link failed");
    }
    this.attribPosition = gl.getAttribLocation(this.program, "position");
    this.attribColor = gl.getAttribLocation(this.program, "color");
    this.uniformViewProj = gl.getUniformLocation(this.program, "viewProj")!;
    this.uniformPointSize = gl.getUniformLocation(this.program, "pointSize")!;
    this.positionBuffer = gl.createBuffer()!;
    this.colorBuffer = gl.createBuffer()!;
    this.haloPositionBuffer = gl.createBuffer()!;
    this.haloColorBuffer = gl.createBuffer()!;
    gl.clearColor(0.07, 0.08, 0.1, 1.0);
    gl.enable(gl.DEPTH_TEST);
  }

  setCloud(positions: Float32Array, colors01: Float32Array, count: number): void {
    const gl = this.gl;
    gl.bindBuffer(gl.ARRAY_BUFFER, this.positionBuffer);
    gl.bufferData(gl.ARRAY_BUFFER, positions, gl.STATIC_DRAW);
    gl.bindBuffer(gl.ARRAY_BUFFER, this.colorBuffer);
    gl.bufferData(gl.ARRAY_BUFFER, colors01, gl.STATIC_DRAW);
    this.count = count;
  }

  /** Subset of points drawn enlarged under the cloud (selection + labels). */
  setHalo(positions: Float32Array, colors01: Float32Array, count: number): void {
    const gl = this.gl;
    gl.bindBuffer(gl.ARRAY_BUFFER, this.haloPositionBuffer);
    gl.bufferData(gl.ARRAY_BUFFER, positions, gl.DYNAMIC_DRAW);
    gl.bindBuffer(gl.ARRAY_BUFFER, this.haloColorBuffer);
    gl.bufferData(gl.ARRAY_BUFFER, colors01, gl.DYNAMIC_DRAW);
    this.haloCount = count;
  }

  private drawPass(
    positionBuffer: WebGLBuffer,
    colorBuffer: WebGLBuffer,
    count: number,
    viewProj: Mat4,
    pointSize: number,
  ): void {
    const gl = this.gl;
    gl.useProgram(this.program);
    gl.uniformMatrix4fv(this.uniformViewProj, false, viewProj);
    gl.uniform1f(this.uniformPointSize, pointSize);
    gl.bindBuffer(gl.ARRAY_BUFFER, positionBuffer);
    gl.enableVertexAttribArray(this.attribPosition);
    gl.vertexAttribPointer(this.attribPosition, 3, gl.FLOAT, false, 0, 0);
    gl.bindBuffer(gl.ARRAY_BUFFER, colorBuffer);
    gl.enableVertexAttribArray(this.attribColor);
    gl.vertexAttribPointer(this.attribColor, 3, gl.FLOAT, false, 0, 0);
    gl.drawArrays(gl.POINTS, 0, count);
  }

  render(viewProj: Mat4): void {
    const gl = this.gl;
    const w = this.canvas.clientWidth;
    const h = this.canvas.clientHeight;
    if (this.canvas.width !== w || this.canvas.height !== h) {
      this.canvas.width = w;
      this.canvas.height = h;
    }
    gl.viewport(0, 0, this.canvas.width, this.canvas.height);
    gl.clear(gl.COLOR_BUFFER_BIT | gl.DEPTH_BUFFER_BIT);
    if (this.haloCount > 0) {
      this.drawPass(this.haloPositionBuffer, this.haloColorBuffer, this.haloCount, viewProj, 9.0);
    }
    if (this.count > 0) {
      this.drawPass(this.positionBuffer, this.colorBuffer, this.count, viewProj, 3.5);
    }
  }
}
