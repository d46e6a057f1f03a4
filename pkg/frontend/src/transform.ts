/**
 * Viewport <-> image coordinate transforms.
 *
 * A viewport is the image point at the canvas center plus a zoom factor
 * (css pixels per image pixel). Both directions are exact affine maps,
 * so a round trip stays within floating-point noise (far under the 1px
 * contract).
 */

import type { Point } from "./types.js";

export interface Viewport {
  centerX: number; // image coords
  centerY: number;
  zoom: number; // css px per image px, > 0
  canvasW: number; // css px
  canvasH: number;
}

export function viewportToImage(p: Point, v: Viewport): Point {
  return {
    x: v.centerX + (p.x - v.canvasW / 2) / v.zoom,
    y: v.centerY + (p.y - v.canvasH / 2) / v.zoom,
  };
}

export function imageToViewport(p: Point, v: Viewport): Point {
  return {
    x: (p.x - v.centerX) * v.zoom + v.canvasW / 2,
    y: (p.y - v.centerY) * v.zoom + v.canvasH / 2,
  };
}

/** Image-space rectangle currently visible on the canvas. */
export function visibleImageRect(v: Viewport) {
  const topLeft = viewportToImage({ x: 0, y: 0 }, v);
  const bottomRight = viewportToImage({ x: v.canvasW, y: v.canvasH }, v);
  return { x1: topLeft.x, y1: topLeft.y, x2: bottomRight.x, y2: bottomRight.y };
}

/** Pan by a css-pixel delta (drag follows the pointer). */
export function panBy(v: Viewport, dxCss: number, dyCss: number): Viewport {
  return { ...v, centerX: v.centerX - dxCss / v.zoom, centerY: v.centerY - dyCss / v.zoom };
}

/** Zoom by a factor keeping the given canvas point fixed (wheel target). */
export function zoomAt(v: Viewport, factor: number, pivot: Point): Viewport {
  const anchor = viewportToImage(pivot, v);
  const zoom = Math.max(1e-6, v.zoom * factor);
  // solve center so that `anchor` stays under `pivot` at the new zoom
  return {
    ...v,
    zoom,
    centerX: anchor.x - (pivot.x - v.canvasW / 2) / zoom,
    centerY: anchor.y - (pivot.y - v.canvasH / 2) / zoom,
  };
}
