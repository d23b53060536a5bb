// Canvas annotation editor: renders the scene image with draggable and
// resizable boxes and routes mouse gestures into the pure state module.

import { ApiClient } from "./api.js";
import {
  Handle,
  hitBox,
  hitHandle,
  moveBox,
  resizeBox,
  roundBox,
} from "./geometry.js";
import * as state from "./state.js";
import type { Box } from "./types.js";

const RECORD_COLORS = ["#e63946", "#1d78d8", "#2ea043", "#ff8c00", "#8e44ad", "#00aaa0"];
const LANDMARK_COLOR = "#808080";

interface Drag {
  handle: Handle;
  lastX: number;
  lastY: number;
}

export class AnnotationEditor {
  state: state.EditState = {
    records: [],
    landmarks: [],
    confirmed: [],
    dirty: false,
    selected: null,
  };
  private image: HTMLImageElement | null = null;
  private drag: Drag | null = null;
  private banner: (msg: string, isError: boolean) => void;

  constructor(
    private api: ApiClient,
    private sessionId: string,
    private canvas: HTMLCanvasElement,
    banner?: (msg: string, isError: boolean) => void,
  ) {
    this.banner = banner ?? (() => {});
    canvas.addEventListener("mousedown", (e) => this.onMouseDown(e));
    canvas.addEventListener("mousemove", (e) => this.onMouseMove(e));
    canvas.addEventListener("mouseup", () => this.onMouseUp());
    canvas.addEventListener("mouseleave", () => this.onMouseUp());
  }

  async load(): Promise<void> {
    const payload = await this.api.getAnnotations(this.sessionId);
    this.state = state.fromAnnotations(payload);
    await this.loadImage();
    this.render();
  }

  private loadImage(): Promise<void> {
    return new Promise((resolve) => {
      const img = new Image();
      img.onload = () => {
        this.canvas.width = img.naturalWidth;
        this.canvas.height = img.naturalHeight;
        this.image = img;
        resolve();
      };
      img.onerror = () => {
        this.image = null;
        resolve();
      };
      // cache-bust: the service rewrites annotated.png on every save
      img.src = this.api.annotatedImageUrl(this.sessionId) + "?t=" + Date.now();
    });
  }

  async save(): Promise<void> {
    try {
      const payload = await this.api.putAnnotations(this.sessionId, state.toPayload(this.state));
      this.state = state.fromAnnotations(payload);
      await this.loadImage();
      this.render();
      this.banner("saved", false);
    } catch (err) {
      this.banner(`save failed: ${err}`, true);
    }
  }

  async refresh(): Promise<void> {
    try {
      const payload = await this.api.refreshAnnotations(this.sessionId);
      this.state = state.fromAnnotations(payload);
      await this.loadImage();
      this.render();
      this.banner("re-detected; confirmed boxes kept", false);
    } catch (err) {
      this.banner(`refresh failed: ${err}`, true);
    }
  }

  addRecord(label: string): void {
    const box = this.centeredBox(60);
    this.state = state.addRecord(this.state, label, box);
    this.render();
  }

  addLandmark(name: string): void {
    try {
      this.state = state.addLandmark(this.state, name, this.centeredBox(80));
      this.render();
    } catch (err) {
      this.banner(String(err), true);
    }
  }

  deleteSelected(): void {
    this.state = state.deleteSelected(this.state);
    this.render();
  }

  relabelSelected(label: string): void {
    this.state = state.relabelSelected(this.state, label);
    this.render();
  }

  confirmSelected(): void {
    const sel = this.state.selected;
    if (sel?.kind === "record") {
      this.state = state.toggleConfirmed(this.state, this.state.records[sel.index].uuid);
      this.render();
    }
  }

  private centeredBox(side: number): Box {
    const cx = this.canvas.width / 2;
    const cy = this.canvas.height / 2;
    return [cx - side / 2, cy - side / 2, cx + side / 2, cy + side / 2];
  }

  private canvasPoint(e: MouseEvent): [number, number] {
    const rect = this.canvas.getBoundingClientRect();
    const scaleX = this.canvas.width / rect.width;
    const scaleY = this.canvas.height / rect.height;
    return [(e.clientX - rect.left) * scaleX, (e.clientY - rect.top) * scaleY];
  }

  private onMouseDown(e: MouseEvent): void {
    const [x, y] = this.canvasPoint(e);
    const selBox = state.selectedBox(this.state);
    if (selBox) {
      const handle = hitHandle(selBox, x, y);
      if (handle) {
        this.drag = { handle, lastX: x, lastY: y };
        return;
      }
    }
    const recordIndex = hitBox(this.state.records.map((r) => r.box), x, y);
    if (recordIndex >= 0) {
      this.state = state.select(this.state, { kind: "record", index: recordIndex });
      this.drag = { handle: "move", lastX: x, lastY: y };
      this.render();
      return;
    }
    const lmIndex = hitBox(this.state.landmarks.map((l) => l.box), x, y);
    if (lmIndex >= 0) {
      this.state = state.select(this.state, { kind: "landmark", index: lmIndex });
      this.drag = { handle: "move", lastX: x, lastY: y };
      this.render();
      return;
    }
    this.state = state.select(this.state, null);
    this.render();
  }

  private onMouseMove(e: MouseEvent): void {
    if (!this.drag) return;
    const [x, y] = this.canvasPoint(e);
    const dx = x - this.drag.lastX;
    const dy = y - this.drag.lastY;
    this.drag.lastX = x;
    this.drag.lastY = y;
    const box = state.selectedBox(this.state);
    if (!box) return;
    const next =
      this.drag.handle === "move"
        ? moveBox(box, dx, dy, this.canvas.width, this.canvas.height)
        : resizeBox(box, this.drag.handle, dx, dy, this.canvas.width, this.canvas.height);
    this.state = state.setBox(this.state, this.state.selected, next);
    this.render();
  }

  private onMouseUp(): void {
    if (this.drag) {
      const box = state.selectedBox(this.state);
      if (box) {
        this.state = state.setBox(this.state, this.state.selected, roundBox(box));
      }
      this.drag = null;
      this.render();
    }
  }

  highlight(uuids: string[]): void {
    this.render(new Set(uuids));
  }

  render(highlighted: Set<string> = new Set()): void {
    const ctx = this.canvas.getContext("2d");
    if (!ctx) return;
    ctx.clearRect(0, 0, this.canvas.width, this.canvas.height);
    if (this.image) {
      ctx.drawImage(this.image, 0, 0);
    } else {
      ctx.fillStyle = "#f2f0ea";
      ctx.fillRect(0, 0, this.canvas.width, this.canvas.height);
    }

    const labels = [...new Set(this.state.records.map((r) => r.label))].sort();
    const colorOf = (label: string) =>
      RECORD_COLORS[labels.indexOf(label) % RECORD_COLORS.length];

    this.state.landmarks.forEach((lm, i) => {
      const selected =
        this.state.selected?.kind === "landmark" && this.state.selected.index === i;
      this.drawBox(ctx, lm.box, LANDMARK_COLOR, lm.name, selected, false);
    });
    this.state.records.forEach((rec, i) => {
      const selected =
        this.state.selected?.kind === "record" && this.state.selected.index === i;
      const confirmed = this.state.confirmed.includes(rec.uuid);
      const label = confirmed ? `${rec.name} ✓` : rec.name;
      this.drawBox(ctx, rec.box, colorOf(rec.label), label, selected, highlighted.has(rec.uuid));
    });
  }

  private drawBox(
    ctx: CanvasRenderingContext2D,
    box: Box,
    color: string,
    label: string,
    selected: boolean,
    highlighted: boolean,
  ): void {
    const [x1, y1, x2, y2] = box;
    ctx.lineWidth = highlighted ? 5 : 3;
    ctx.strokeStyle = highlighted ? "#ffd500" : color;
    ctx.strokeRect(x1, y1, x2 - x1, y2 - y1);
    ctx.font = "13px sans-serif";
    const tw = ctx.measureText(label).width;
    ctx.fillStyle = color;
    ctx.fillRect(x1, Math.max(0, y1 - 18), tw + 8, 18);
    ctx.fillStyle = "#fff";
    ctx.fillText(label, x1 + 4, Math.max(12, y1 - 5));
    if (selected) {
      ctx.fillStyle = color;
      for (const [hx, hy] of [
        [x1, y1], [x2, y1], [x1, y2], [x2, y2],
        [(x1 + x2) / 2, y1], [(x1 + x2) / 2, y2], [x1, (y1 + y2) / 2], [x2, (y1 + y2) / 2],
      ]) {
        ctx.fillRect(hx - 4, hy - 4, 8, 8);
      }
    }
  }
}
