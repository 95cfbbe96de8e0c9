import { ApiClient, ApiError } from "./api";
import { OrbitCamera, projectPoints } from "./camera";
import { pathLength, selectInPolygon, type Point2 } from "./lasso";
import { PointRenderer } from "./renderer";
import { SelectionState } from "./selection";
import { buildSubmission, freshSubmissionId } from "./submission";
import { CLASS_COLORS, CLASS_LABELS, type ClassLabel, type CloudPayload } from "./types";

const SELECTION_COLOR: [number, number, number] = [1.0, 1.0, 1.0];

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function serviceBaseUrl(): string {
  const fromQuery = new URLSearchParams(window.location.search).get("service");
  if (fromQuery) return fromQuery.replace(/\/$/, "");
  if (window.location.protocol.startsWith("http") && window.location.pathname.startsWith("/ui")) {
    return window.location.origin; // served by the labeling service itself
  }
  return "http://127.0.0.1:8787";
}

class App {
  private api = new ApiClient(serviceBaseUrl());
  private canvas = el<HTMLCanvasElement>("viewer");
  private overlay = el<HTMLCanvasElement>("overlay");
  private renderer = new PointRenderer(this.canvas);
  private camera = new OrbitCamera([1, 0, 0]); // cloud height axis is x
  private state: SelectionState | null = null;
  private payload: CloudPayload | null = null;
  private positions = new Float32Array(0);
  private screenXY = new Float32Array(0);
  private lassoMode = false;
  private lassoPath: Point2[] = [];
  private dragButton = -1;
  private lastX = 0;
  private lastY = 0;
  private pendingSubmissionId: string | null = null;
  private submitting = false;
  private haloDirty = true;
  private frames = 0;
  private lastFpsTime = performance.now();

  async start(): Promise<void> {
    this.bindUi();
    const requested = new URLSearchParams(window.location.search).get("cloud");
    try {
      const listing = await this.api.listClouds();
      if (listing.clouds.length === 0) throw new ApiError("no clouds registered");
      const cloudId = requested ?? listing.clouds[0].cloud_id;
      await this.loadCloud(cloudId);
      this.setBanner(null);
    } catch (err) {
      this.setBanner(`${err instanceof ApiError ? err.message : String(err)} `, true);
      return;
    }
    requestAnimationFrame(() => this.frame());
  }

  private async loadCloud(cloudId: string): Promise<void> {
    const payload = await this.api.fetchCloud(cloudId);
    this.payload = payload;
    this.state = new SelectionState(payload.display_count);
    const n = payload.display_count;
    this.positions = new Float32Array(3 * n);
    const colors = new Float32Array(3 * n);
    const min = [Infinity, Infinity, Infinity];
    const max = [-Infinity, -Infinity, -Infinity];
    for (let i = 0; i < n; i++) {
      for (let axis = 0; axis < 3; axis++) {
        const v = payload.points[i][axis];
        this.positions[3 * i + axis] = v;
        min[axis] = Math.min(min[axis], v);
        max[axis] = Math.max(max[axis], v);
      }
      colors[3 * i] = payload.colors[i][0] / 255;
      colors[3 * i + 1] = payload.colors[i][1] / 255;
      colors[3 * i + 2] = payload.colors[i][2] / 255;
    }
    this.screenXY = new Float32Array(2 * n);
    this.renderer.setCloud(this.positions, colors, n);
    this.camera.frame(min, max);
    this.haloDirty = true;
    el<HTMLSpanElement>("cloud-name").textContent =
      `${payload.cloud_id} (${n} of ${payload.point_count} points shown)`;
    this.refreshStatus();
  }

  private bindUi(): void {
    for (const label of CLASS_LABELS) {
      el<HTMLButtonElement>(`btn-${label.toLowerCase()}`).onclick = () => this.applyLabel(label);
    }
    el<HTMLButtonElement>("btn-lasso").onclick = () => this.toggleLasso();
    el<HTMLButtonElement>("btn-undo").onclick = () => this.undo();
    el<HTMLButtonElement>("btn-clear").onclick = () => {
      this.state?.clear();
      this.haloDirty = true;
      this.refreshStatus();
    };
    el<HTMLButtonElement>("btn-submit").onclick = () => void this.submit();

    window.addEventListener("keydown", (ev) => {
      if (ev.key === "l") this.toggleLasso();
      else if (ev.key === "g") this.applyLabel("Green");
      else if (ev.key === "y") this.applyLabel("Yellow");
      else if (ev.key === "t") this.applyLabel("Trunk");
      else if (ev.key === "u" || (ev.ctrlKey && ev.key === "z")) this.undo();
      else if (ev.key === "Escape") {
        this.lassoPath = [];
        this.drawLasso();
      }
    });

    this.overlay.addEventListener("mousedown", (ev) => {
      this.dragButton = ev.button;
      this.lastX = ev.offsetX;
      this.lastY = ev.offsetY;
      if (this.lassoMode && ev.button === 0) {
        this.lassoPath = [{ x: ev.offsetX, y: ev.offsetY }];
      }
    });
    this.overlay.addEventListener("mousemove", (ev) => {
      if (this.dragButton < 0) return;
      const dx = ev.offsetX - this.lastX;
      const dy = ev.offsetY - this.lastY;
      this.lastX = ev.offsetX;
      this.lastY = ev.offsetY;
      if (this.lassoMode && this.dragButton === 0) {
        this.lassoPath.push({ x: ev.offsetX, y: ev.offsetY });
        this.drawLasso();
      } else if (this.dragButton === 0 && !ev.shiftKey) {
        this.camera.rotate(dx, dy);
      } else {
        this.camera.pan(dx, dy, this.canvas.clientHeight);
      }
    });
    window.addEventListener("mouseup", (ev) => {
      if (this.lassoMode && this.dragButton === 0 && this.lassoPath.length > 2) {
        this.finishLasso(ev.shiftKey);
      }
      this.dragButton = -1;
    });
    this.overlay.addEventListener("wheel", (ev) => {
      ev.preventDefault();
      this.camera.zoom(ev.deltaY);
    });
    this.overlay.addEventListener("contextmenu", (ev) => ev.preventDefault());
  }

  private toggleLasso(): void {
    this.lassoMode = !this.lassoMode;
    this.lassoPath = [];
    this.drawLasso();
    el<HTMLButtonElement>("btn-lasso").classList.toggle("active", this.lassoMode);
    this.overlay.style.cursor = this.lassoMode ? "crosshair" : "grab";
  }

  private finishLasso(additive: boolean): void {
    if (!this.state || pathLength(this.lassoPath) < 8) {
      this.lassoPath = [];
      this.drawLasso();
      return;
    }
    const viewProj = this.camera.viewProjection(this.canvas.clientWidth, this.canvas.clientHeight);
    projectPoints(
      this.positions,
      this.state.displayCount,
      viewProj,
      this.canvas.clientWidth,
      this.canvas.clientHeight,
      this.screenXY,
    );
    const hits = selectInPolygon(this.screenXY, this.state.displayCount, this.lassoPath);
    if (additive) this.state.addToSelection(hits);
    else this.state.select(hits);
    this.lassoPath = [];
    this.drawLasso();
    this.haloDirty = true;
    this.refreshStatus();
  }

  private applyLabel(label: ClassLabel): void {
    if (!this.state) return;
    this.state.activeLabel = label;
    const n = this.state.labelSelection(label);
    if (n > 0) {
      this.haloDirty = true;
      this.refreshStatus();
    }
    for (const name of CLASS_LABELS) {
      el<HTMLButtonElement>(`btn-${name.toLowerCase()}`).classList.toggle(
        "active",
        name === label,
      );
    }
  }

  private undo(): void {
    if (this.state?.undo()) {
      this.haloDirty = true;
      this.refreshStatus();
    }
  }

  private async submit(): Promise<void> {
    if (!this.state || !this.payload || this.submitting) return;
    const entries = this.state.labeledEntries();
    if (entries.length === 0) return;
    // reuse the id on retry so a transient failure cannot double-append
    this.pendingSubmissionId ??= freshSubmissionId();
    const submission = buildSubmission(
      this.state, this.payload, "labeler-ui", this.pendingSubmissionId);
    this.submitting = true;
    el<HTMLButtonElement>("btn-submit").disabled = true;
    try {
      const response = await this.api.submitLabels(submission);
      this.pendingSubmissionId = null;
      this.state.clear();
      this.haloDirty = true;
      this.setBanner(null);
      const stats = await this.api.datasetStats().catch(() => null);
      const total = stats ? ` - dataset now ${stats.rows} rows` : "";
      el<HTMLSpanElement>("status").textContent =
        `submitted ${response.appended} labels${total}`;
    } catch (err) {
      // labels stay local; the same payload can be retried
      this.setBanner(
        `submit failed: ${err instanceof ApiError ? err.message : String(err)} - labels kept, retry`,
        true,
      );
    } finally {
      this.submitting = false;
      this.refreshStatus();
    }
  }

  private refreshStatus(): void {
    if (!this.state) return;
    const counts = this.state.countByLabel();
    el<HTMLSpanElement>("counts").textContent =
      `selected ${this.state.selectedCount} | pending ` +
      CLASS_LABELS.map((c) => `${c} ${counts[c]}`).join(", ");
    el<HTMLButtonElement>("btn-submit").disabled =
      this.submitting || this.state.labeledCount === 0;
    el<HTMLButtonElement>("btn-undo").disabled = !this.state.canUndo;
  }

  private rebuildHalo(): void {
    if (!this.state) return;
    const picks: [number, [number, number, number]][] = [];
    for (const [i, label] of this.state.labeledEntries()) picks.push([i, CLASS_COLORS[label]]);
    for (const i of this.state.selectedIndices) picks.push([i, SELECTION_COLOR]);
    const positions = new Float32Array(3 * picks.length);
    const colors = new Float32Array(3 * picks.length);
    picks.forEach(([index, rgb], row) => {
      positions[3 * row] = this.positions[3 * index];
      positions[3 * row + 1] = this.positions[3 * index + 1];
      positions[3 * row + 2] = this.positions[3 * index + 2];
      colors[3 * row] = rgb[0];
      colors[3 * row + 1] = rgb[1];
      colors[3 * row + 2] = rgb[2];
    });
    this.renderer.setHalo(positions, colors, picks.length);
    this.haloDirty = false;
  }

  private drawLasso(): void {
    const ctx = this.overlay.getContext("2d");
    if (!ctx) return;
    if (this.overlay.width !== this.overlay.clientWidth || this.overlay.height !== this.overlay.clientHeight) {
      this.overlay.width = this.overlay.clientWidth;
      this.overlay.height = this.overlay.clientHeight;
    }
    ctx.clearRect(0, 0, this.overlay.width, this.overlay.height);
    if (this.lassoPath.length < 2) return;
    ctx.strokeStyle = "#7fd4ff";
    ctx.lineWidth = 1.5;
    ctx.setLineDash([5, 4]);
    ctx.beginPath();
    ctx.moveTo(this.lassoPath[0].x, this.lassoPath[0].y);
    for (const p of this.lassoPath.slice(1)) ctx.lineTo(p.x, p.y);
    ctx.closePath();
    ctx.stroke();
  }

  private setBanner(message: string | null, isError = false): void {
    const banner = el<HTMLDivElement>("banner");
    if (!message) {
      banner.style.display = "none";
      return;
    }
    banner.style.display = "block";
    banner.className = isError ? "banner error" : "banner";
    banner.textContent = message;
    if (isError) {
      const retry = document.createElement("button");
      retry.textContent = "retry";
      retry.onclick = () => window.location.reload();
      banner.appendChild(retry);
    }
  }

  private frame(): void {
    if (this.haloDirty) this.rebuildHalo();
    const viewProj = this.camera.viewProjection(this.canvas.clientWidth, this.canvas.clientHeight);
    this.renderer.render(viewProj);
    this.frames++;
    const now = performance.now();
    if (now - this.lastFpsTime > 1000) {
      el<HTMLSpanElement>("fps").textContent = `${this.frames} fps`;
      this.frames = 0;
      this.lastFpsTime = now;
    }
    requestAnimationFrame(() => this.frame());
  }
}

void new App().start();
