// Pointer-input state machines. Tools translate screen gestures into
// constraint payloads in image coordinates; all geometry (meshes, previews,
// solves) stays on the server.

import type { ConstraintPatch } from "./types";

export interface ViewTransform {
  scale: number;    // screen pixels per image pixel
  offsetX: number;  // screen position of image (0, 0)
  offsetY: number;
}

export function screenToImage(
  view: ViewTransform,
  sx: number,
  sy: number,
): [number, number] {
  return [(sx - view.offsetX) / view.scale, (sy - view.offsetY) / view.scale];
}

export function imageToScreen(
  view: ViewTransform,
  ix: number,
  iy: number,
): [number, number] {
  return [ix * view.scale + view.offsetX, iy * view.scale + view.offsetY];
}

export const DEFAULT_DRAG_WEIGHT = 50.0;

export interface DragGesture {
  anchor: [number, number];
  target: [number, number];
}

// A drag with no displacement is a no-op: no constraint gets posted.
export function dragToPatch(
  gesture: DragGesture,
  weight: number = DEFAULT_DRAG_WEIGHT,
): ConstraintPatch | null {
  const [ax, ay] = gesture.anchor;
  const [tx, ty] = gesture.target;
  if (ax === tx && ay === ty) {
    return null;
  }
  return {
    add: { points: [{ anchor: [ax, ay], target: [tx, ty], weight }] },
  };
}

// Lines need at least two points; shorter drawings are rejected client-side.
export function lineToPatch(points: [number, number][]): ConstraintPatch | null {
  if (points.length < 2) {
    return null;
  }
  return { add: { lines: [points.map((p) => [p[0], p[1]])] } };
}

export function clampToImage(
  pt: [number, number],
  width: number,
  height: number,
): [number, number] {
  return [
    Math.min(Math.max(pt[0], 0), width - 1),
    Math.min(Math.max(pt[1], 0), height - 1),
  ];
}

export interface PanGesture {
  startX: number;
  startY: number;
  baseOffsetX: number;
  baseOffsetY: number;
}

export function panView(view: ViewTransform, g: PanGesture, sx: number, sy: number): ViewTransform {
  return {
    ...view,
    offsetX: g.baseOffsetX + (sx - g.startX),
    offsetY: g.baseOffsetY + (sy - g.startY),
  };
}

export function fitView(
  imageW: number,
  imageH: number,
  canvasW: number,
  canvasH: number,
): ViewTransform {
  const scale = Math.min(canvasW / imageW, canvasH / imageH);
  return {
    scale,
    offsetX: (canvasW - imageW * scale) / 2,
    offsetY: (canvasH - imageH * scale) / 2,
  };
}
