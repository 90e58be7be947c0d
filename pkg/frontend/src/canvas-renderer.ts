// Canvas painting of server-produced state: base preview bitmaps, the mesh
// overlay (rest grid faint, deformed grid solid), constraint markers and the
// in-progress line. The renderer computes nothing geometric beyond the view
// transform.

import type { EditorState } from "./editor-state";
import type { MeshJson } from "./types";
import { imageToScreen, type ViewTransform } from "./tools";

export interface PreviewBitmaps {
  original: ImageBitmap | null;
  corrected: ImageBitmap | null;
}

function drawGrid(
  ctx: CanvasRenderingContext2D,
  mesh: MeshJson,
  which: "rest" | "current",
  view: ViewTransform,
  style: string,
  width: number,
): void {
  const grid = mesh[which];
  ctx.strokeStyle = style;
  ctx.lineWidth = width;
  ctx.beginPath();
  for (let r = 0; r < mesh.rows; r++) {
    for (let c = 0; c < mesh.cols; c++) {
      const [sx, sy] = imageToScreen(view, grid[r][c][0], grid[r][c][1]);
      if (c === 0) {
        ctx.moveTo(sx, sy);
      } else {
        ctx.lineTo(sx, sy);
      }
    }
  }
  for (let c = 0; c < mesh.cols; c++) {
    for (let r = 0; r < mesh.rows; r++) {
      const [sx, sy] = imageToScreen(view, grid[r][c][0], grid[r][c][1]);
      if (r === 0) {
        ctx.moveTo(sx, sy);
      } else {
        ctx.lineTo(sx, sy);
      }
    }
  }
  ctx.stroke();
}

function drawPreview(
  ctx: CanvasRenderingContext2D,
  state: EditorState,
  bitmaps: PreviewBitmaps,
  view: ViewTransform,
): void {
  const server = state.server;
  if (!server) {
    return;
  }
  const w = server.width * view.scale;
  const h = server.height * view.scale;
  const mode = state.previewMode;
  const base =
    mode === "original" || mode === "projected"
      ? bitmaps.original
      : bitmaps.corrected;
  if (base) {
    ctx.drawImage(base, view.offsetX, view.offsetY, w, h);
  }
  if (mode === "split" && bitmaps.original) {
    // left half original, right half corrected
    ctx.save();
    ctx.beginPath();
    ctx.rect(view.offsetX, view.offsetY, w / 2, h);
    ctx.clip();
    ctx.drawImage(bitmaps.original, view.offsetX, view.offsetY, w, h);
    ctx.restore();
    ctx.strokeStyle = "#ffffff88";
    ctx.beginPath();
    ctx.moveTo(view.offsetX + w / 2, view.offsetY);
    ctx.lineTo(view.offsetX + w / 2, view.offsetY + h);
    ctx.stroke();
  }
}

export function render(
  ctx: CanvasRenderingContext2D,
  state: EditorState,
  bitmaps: PreviewBitmaps,
  view: ViewTransform,
): void {
  ctx.clearRect(0, 0, ctx.canvas.width, ctx.canvas.height);
  const server = state.server;
  if (!server) {
    ctx.fillStyle = "#888";
    ctx.fillText("drop a PNG to start a session", 16, 24);
    return;
  }

  drawPreview(ctx, state, bitmaps, view);
  drawGrid(ctx, server.mesh, "rest", view, "#4caf5040", 1);
  drawGrid(ctx, server.mesh, "current", view, "#4caf50c0", 1.5);

  // point constraints: anchor dot, arrow to target
  ctx.strokeStyle = "#ff9800";
  ctx.fillStyle = "#ff9800";
  for (const pc of server.constraints.point_constraints) {
    const [ax, ay] = imageToScreen(view, pc.anchor[0], pc.anchor[1]);
    const [tx, ty] = imageToScreen(view, pc.target[0], pc.target[1]);
    ctx.beginPath();
    ctx.arc(ax, ay, 4, 0, 2 * Math.PI);
    ctx.fill();
    ctx.beginPath();
    ctx.moveTo(ax, ay);
    ctx.lineTo(tx, ty);
    ctx.stroke();
  }

  // committed line constraints
  ctx.strokeStyle = "#03a9f4";
  ctx.lineWidth = 2;
  for (const line of server.constraints.line_constraints) {
    ctx.beginPath();
    line.forEach(([x, y], i) => {
      const [sx, sy] = imageToScreen(view, x, y);
      if (i === 0) {
        ctx.moveTo(sx, sy);
      } else {
        ctx.lineTo(sx, sy);
      }
    });
    ctx.stroke();
  }

  // in-progress line
  if (state.pendingLine.length > 0) {
    ctx.strokeStyle = "#03a9f488";
    ctx.setLineDash([6, 4]);
    ctx.beginPath();
    state.pendingLine.forEach(([x, y], i) => {
      const [sx, sy] = imageToScreen(view, x, y);
      if (i === 0) {
        ctx.moveTo(sx, sy);
      } else {
        ctx.lineTo(sx, sy);
      }
    });
    ctx.stroke();
    ctx.setLineDash([]);
  }
}
