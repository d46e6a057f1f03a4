/**
 * Annotation drawing: pointer gestures -> image-space vectors.
 *
 * Boxes, circles and lines are drag gestures; polygons collect vertices
 * click by click and refuse to close under 3 (mirroring the server's
 * validation so the round trip never 400s); single click delegates the
 * geometry to the server but exposes the same placement rule for the
 * optimistic preview.
 */

import type { Point, Rect, Template, Vector } from "./types.js";
import type { Viewport } from "./transform.js";
import { viewportToImage } from "./transform.js";

export type ToolMode =
  | "pan"
  | "draw_box"
  | "draw_polygon"
  | "draw_line"
  | "draw_circle"
  | "single_click"
  | "verify";

export interface DrawResult {
  kind: "box" | "polygon" | "line" | "circle";
  vector: Vector;
}

function clampToImage(p: Point, imageW: number, imageH: number): Point {
  return {
    x: Math.min(Math.max(p.x, 0), imageW),
    y: Math.min(Math.max(p.y, 0), imageH),
  };
}

export class DrawingTool {
  mode: ToolMode = "pan";
  activeTemplate: Template | null = null;
  private dragStart: Point | null = null; // image coords
  private dragCurrent: Point | null = null;
  private polygonVertices: Point[] = [];

  constructor(
    private imageW: number,
    private imageH: number,
  ) {}

  setMode(mode: ToolMode): void {
    this.mode = mode;
    this.reset();
  }

  reset(): void {
    this.dragStart = null;
    this.dragCurrent = null;
    this.polygonVertices = [];
  }

  get inProgressVertices(): Point[] {
    return [...this.polygonVertices];
  }

  pointerDown(cssPoint: Point, viewport: Viewport): void {
    const p = clampToImage(viewportToImage(cssPoint, viewport), this.imageW, this.imageH);
    if (this.mode === "draw_polygon") {
      this.polygonVertices.push(p);
    } else if (this.mode !== "pan") {
      this.dragStart = p;
      this.dragCurrent = p;
    }
  }

  pointerMove(cssPoint: Point, viewport: Viewport): void {
    if (this.dragStart) {
      this.dragCurrent = clampToImage(
        viewportToImage(cssPoint, viewport), this.imageW, this.imageH);
    }
  }

  /** Finish a drag gesture; null when the geometry would be degenerate. */
  pointerUp(cssPoint: Point, viewport: Viewport): DrawResult | null {
    if (!this.dragStart) return null;
    const start = this.dragStart;
    const end = clampToImage(viewportToImage(cssPoint, viewport), this.imageW, this.imageH);
    this.dragStart = null;
    this.dragCurrent = null;

    if (this.mode === "draw_line") {
      if (start.x === end.x && start.y === end.y) return null;
      return { kind: "line", vector: { x1: start.x, y1: start.y, x2: end.x, y2: end.y } };
    }
    if (this.mode === "draw_box" || this.mode === "draw_circle") {
      const rect = normalizedRect(start, end);
      if (rect.x2 - rect.x1 < 1 || rect.y2 - rect.y1 < 1) return null; // zero-size: refuse
      return {
        kind: this.mode === "draw_box" ? "box" : "circle",
        vector: { x1: rect.x1, y1: rect.y1, x2: rect.x2, y2: rect.y2 },
      };
    }
    return null;
  }

  /** Close the polygon; null (blocked) under 3 vertices. */
  closePolygon(): DrawResult | null {
    if (this.mode !== "draw_polygon") return null;
    if (this.polygonVertices.length < 3) return null;
    const vector: Vector = {};
    this.polygonVertices.forEach((vertex, index) => {
      vector[`x${index + 1}`] = vertex.x;
      vector[`y${index + 1}`] = vertex.y;
    });
    this.polygonVertices = [];
    return { kind: "polygon", vector };
  }
}

export function normalizedRect(a: Point, b: Point): Rect {
  return {
    x1: Math.min(a.x, b.x),
    y1: Math.min(a.y, b.y),
    x2: Math.max(a.x, b.x),
    y2: Math.max(a.y, b.y),
  };
}

/**
 * Client-side preview of the server's single-click placement: template
 * default size centered on the click, shifted (never shrunk) to stay
 * inside the image. Must match the server so the optimistic box is
 * replaced invisibly by the stored one.
 */
export function singleClickPreview(template: Template, click: Point,
                                   imageW: number, imageH: number): Vector | null {
  if (template.vector_kind !== "box" && template.vector_kind !== "circle") return null;
  if (template.default_width == null || template.default_height == null) return null;
  const w = Math.min(template.default_width, imageW);
  const h = Math.min(template.default_height, imageH);
  const x1 = Math.min(Math.max(Math.round(click.x) - Math.floor(w / 2), 0), imageW - w);
  const y1 = Math.min(Math.max(Math.round(click.y) - Math.floor(h / 2), 0), imageH - h);
  return { x1, y1, x2: x1 + w, y2: y1 + h };
}
