// Box math for the annotation editor: hit testing, drag handles, and
// clamped move/resize transforms. Pure functions, canvas-independent.

import type { Box } from "./types.js";

export const HANDLE_SIZE = 8;
export const MIN_SIDE = 4;

export type Handle = "nw" | "ne" | "sw" | "se" | "n" | "s" | "w" | "e" | "move" | null;

export function contains(box: Box, x: number, y: number): boolean {
  return x >= box[0] && x <= box[2] && y >= box[1] && y <= box[3];
}

function nearPoint(x: number, y: number, px: number, py: number): boolean {
  return Math.abs(x - px) <= HANDLE_SIZE && Math.abs(y - py) <= HANDLE_SIZE;
}

// Handle under the cursor for a selected box; corners win over edges,
// edges over plain moves.
export function hitHandle(box: Box, x: number, y: number): Handle {
  const [x1, y1, x2, y2] = box;
  const cx = (x1 + x2) / 2;
  const cy = (y1 + y2) / 2;
  if (nearPoint(x, y, x1, y1)) return "nw";
  if (nearPoint(x, y, x2, y1)) return "ne";
  if (nearPoint(x, y, x1, y2)) return "sw";
  if (nearPoint(x, y, x2, y2)) return "se";
  if (nearPoint(x, y, cx, y1)) return "n";
  if (nearPoint(x, y, cx, y2)) return "s";
  if (nearPoint(x, y, x1, cy)) return "w";
  if (nearPoint(x, y, x2, cy)) return "e";
  if (contains(box, x, y)) return "move";
  return null;
}

// Topmost box whose area contains the point; later entries draw on top.
export function hitBox(boxes: Box[], x: number, y: number): number {
  for (let i = boxes.length - 1; i >= 0; i--) {
    if (contains(boxes[i], x, y)) return i;
  }
  return -1;
}

export function moveBox(box: Box, dx: number, dy: number, width: number, height: number): Box {
  const w = box[2] - box[0];
  const h = box[3] - box[1];
  let x1 = box[0] + dx;
  let y1 = box[1] + dy;
  x1 = Math.min(Math.max(x1, 0), width - w);
  y1 = Math.min(Math.max(y1, 0), height - h);
  return [x1, y1, x1 + w, y1 + h];
}

export function resizeBox(
  box: Box,
  handle: Handle,
  dx: number,
  dy: number,
  width: number,
  height: number,
): Box {
  let [x1, y1, x2, y2] = box;
  if (handle === "nw" || handle === "w" || handle === "sw") x1 += dx;
  if (handle === "ne" || handle === "e" || handle === "se") x2 += dx;
  if (handle === "nw" || handle === "n" || handle === "ne") y1 += dy;
  if (handle === "sw" || handle === "s" || handle === "se") y2 += dy;
  x1 = Math.min(Math.max(x1, 0), width);
  x2 = Math.min(Math.max(x2, 0), width);
  y1 = Math.min(Math.max(y1, 0), height);
  y2 = Math.min(Math.max(y2, 0), height);
  if (x2 - x1 < MIN_SIDE) {
    if (handle === "nw" || handle === "w" || handle === "sw") x1 = x2 - MIN_SIDE;
    else x2 = x1 + MIN_SIDE;
  }
  if (y2 - y1 < MIN_SIDE) {
    if (handle === "nw" || handle === "n" || handle === "ne") y1 = y2 - MIN_SIDE;
    else y2 = y1 + MIN_SIDE;
  }
  return [x1, y1, x2, y2];
}

export function roundBox(box: Box): Box {
  return box.map((v) => Math.round(v * 100) / 100) as Box;
}
