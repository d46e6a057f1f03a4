/**
 * Canvas renderer: tiles, annotation geometry, in-progress drawing, and
 * the screening overlay. Drawing goes through a minimal context
 * interface so render logic is testable without a real canvas.
 */

import type { Annotation, Template, Vector } from "./types.js";
import type { Viewport } from "./transform.js";
import { imageToViewport } from "./transform.js";
import { levelDims, TILE_SIZE, TileAddress, tileKey, visibleTiles } from "./tiles.js";
import type { LruCache } from "./tiles.js";
import type { OverlayModel } from "./screening.js";

/** The subset of CanvasRenderingContext2D the renderer needs. */
export interface DrawContext {
  clearRect(x: number, y: number, w: number, h: number): void;
  drawImage(image: unknown, dx: number, dy: number, dw: number, dh: number): void;
  strokeRect(x: number, y: number, w: number, h: number): void;
  fillRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  ellipse(x: number, y: number, rx: number, ry: number, rot: number,
          a0: number, a1: number): void;
  closePath(): void;
  stroke(): void;
  strokeStyle: string;
  fillStyle: string;
  lineWidth: number;
  globalAlpha: number;
}

export function renderTiles(ctx: DrawContext, cache: LruCache<unknown>, viewport: Viewport,
                            imageW: number, imageH: number, imageId: number,
                            frame = 0): TileAddress[] {
  ctx.clearRect(0, 0, viewport.canvasW, viewport.canvasH);
  const tiles = visibleTiles(viewport, imageW, imageH, imageId, frame);
  if (!tiles.length) return tiles;
  const [lw] = levelDims(imageW, imageH, tiles[0].level);
  const levelScale = imageW / lw; // image px per level px
  const missing: TileAddress[] = [];
  for (const tile of tiles) {
    const bitmap = cache.get(tileKey(tile));
    if (bitmap === undefined) {
      missing.push(tile);
      continue;
    }
    const originImage = {
      x: tile.col * TILE_SIZE * levelScale,
      y: tile.row * TILE_SIZE * levelScale,
    };
    const css = imageToViewport(originImage, viewport);
    const sizeCss = TILE_SIZE * levelScale * viewport.zoom;
    ctx.drawImage(bitmap, css.x, css.y, sizeCss, sizeCss);
  }
  return missing;
}

export function renderAnnotation(ctx: DrawContext, annotation: Annotation,
                                 template: Template | undefined, viewport: Viewport): void {
  const color = template?.color ?? "#ff0000";
  ctx.strokeStyle = color;
  ctx.lineWidth = 2;
  const kind = template?.vector_kind ?? "box";
  drawVector(ctx, kind, annotation.vector, viewport);
}

export function drawVector(ctx: DrawContext, kind: string, vector: Vector,
                           viewport: Viewport): void {
  if (kind === "global" || vector.x1 === undefined) return;
  const a = imageToViewport({ x: vector.x1, y: vector.y1 }, viewport);
  if (kind === "box") {
    const b = imageToViewport({ x: vector.x2, y: vector.y2 }, viewport);
    ctx.strokeRect(a.x, a.y, b.x - a.x, b.y - a.y);
    return;
  }
  if (kind === "circle") {
    const b = imageToViewport({ x: vector.x2, y: vector.y2 }, viewport);
    ctx.beginPath();
    ctx.ellipse((a.x + b.x) / 2, (a.y + b.y) / 2,
                Math.abs(b.x - a.x) / 2, Math.abs(b.y - a.y) / 2, 0, 0, Math.PI * 2);
    ctx.stroke();
    return;
  }
  if (kind === "line") {
    const b = imageToViewport({ x: vector.x2, y: vector.y2 }, viewport);
    ctx.beginPath();
    ctx.moveTo(a.x, a.y);
    ctx.lineTo(b.x, b.y);
    ctx.stroke();
    return;
  }
  // polygon
  ctx.beginPath();
  ctx.moveTo(a.x, a.y);
  for (let i = 2; vector[`x${i}`] !== undefined; i++) {
    const p = imageToViewport({ x: vector[`x${i}`], y: vector[`y${i}`] }, viewport);
    ctx.lineTo(p.x, p.y);
  }
  ctx.closePath();
  ctx.stroke();
}

/** Thumbnail overlay: screened cells in green, field of view in purple. */
export function renderScreeningOverlay(ctx: DrawContext, model: OverlayModel,
                                       imageW: number, imageH: number,
                                       thumbW: number, thumbH: number): void {
  const sx = thumbW / imageW;
  const sy = thumbH / imageH;
  ctx.globalAlpha = 0.35;
  ctx.fillStyle = "#00c000";
  for (const cell of model.greenCells) {
    ctx.fillRect(cell.rect.x1 * sx, cell.rect.y1 * sy,
                 (cell.rect.x2 - cell.rect.x1) * sx, (cell.rect.y2 - cell.rect.y1) * sy);
  }
  ctx.globalAlpha = 1;
  ctx.strokeStyle = "#a000e0";
  ctx.lineWidth = 2;
  ctx.strokeRect(model.fovRect.x1 * sx, model.fovRect.y1 * sy,
                 (model.fovRect.x2 - model.fovRect.x1) * sx,
                 (model.fovRect.y2 - model.fovRect.y1) * sy);
}
