/**
 * Box geometry, kept numerically identical to the pipeline's rules so the
 * annotator accepts exactly the layouts the pipeline would produce.
 */
import type { Box } from "./types.js";

/** Two master boxes may overlap by at most this IoU before they are invalid. */
export const MASTER_OVERLAP_IOU_TOLERANCE = 0.1;

export function area(box: Box): number {
  return Math.max(0, box.x1 - box.x0) * Math.max(0, box.y1 - box.y0);
}

/** True when `outer` fully contains `inner` (inclusive on every edge). */
export function containsBox(outer: Box, inner: Box): boolean {
  return (
    outer.x0 <= inner.x0 && outer.y0 <= inner.y0 && outer.x1 >= inner.x1 && outer.y1 >= inner.y1
  );
}

export function intersectionArea(a: Box, b: Box): number {
  const w = Math.min(a.x1, b.x1) - Math.max(a.x0, b.x0);
  const h = Math.min(a.y1, b.y1) - Math.max(a.y0, b.y0);
  if (w <= 0 || h <= 0) {
    return 0;
  }
  return w * h;
}

export function iou(a: Box, b: Box): number {
  const inter = intersectionArea(a, b);
  if (inter === 0) {
    return 0;
  }
  return inter / (area(a) + area(b) - inter);
}

/** Normalize a drag gesture so x0<=x1 and y0<=y1, rounded to integer pixels. */
export function normalizedBox(ax: number, ay: number, bx: number, by: number): Box {
  return {
    x0: Math.round(Math.min(ax, bx)),
    y0: Math.round(Math.min(ay, by)),
    x1: Math.round(Math.max(ax, bx)),
    y1: Math.round(Math.max(ay, by)),
  };
}

/** A drawable box must have positive area and non-negative origin. */
export function isDrawableBox(box: Box): boolean {
  return box.x0 >= 0 && box.y0 >= 0 && box.x1 > box.x0 && box.y1 > box.y0;
}
