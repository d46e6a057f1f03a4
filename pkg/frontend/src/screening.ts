/**
 * Screening overlay model: green screened cells on the thumbnail, a
 * purple rectangle for the current field of view, and automatic
 * mark/position calls when the viewport settles in an unscreened cell.
 *
 * The bitset mirrors the server's packing (row-major, LSB-first per
 * byte) and the overlay always re-renders from the latest server state,
 * so the green set can never drift from the stored bitset.
 */

import type { Rect, ScreeningState } from "./types.js";
import type { Viewport } from "./transform.js";

export function decodeBitset(base64: string, cells: number): boolean[] {
  const raw = typeof atob === "function"
    ? atob(base64)
    : Buffer.from(base64, "base64").toString("binary");
  const flags: boolean[] = new Array(cells).fill(false);
  for (let index = 0; index < cells; index++) {
    const byte = raw.charCodeAt(index >> 3);
    flags[index] = (byte & (1 << (index & 7))) !== 0;
  }
  return flags;
}

export function cellIndex(state: ScreeningState, col: number, row: number): number {
  return row * state.cols + col;
}

export function isScreened(state: ScreeningState, col: number, row: number): boolean {
  return decodeBitset(state.screened, state.cols * state.rows)[cellIndex(state, col, row)];
}

export function patchRect(state: ScreeningState, col: number, row: number): Rect {
  const x = state.xs[col];
  const y = state.ys[row];
  return { x1: x, y1: y, x2: x + state.patch_w, y2: y + state.patch_h };
}

/** Cell whose patch contains the point; origins are clamped so the last
 * patch wins ties on the trailing edge. */
export function cellForPoint(state: ScreeningState, x: number, y: number): [number, number] {
  const pick = (origins: number[], extent: number, value: number) => {
    let best = 0;
    for (let i = 0; i < origins.length; i++) {
      if (origins[i] <= value && value < origins[i] + extent) best = i;
    }
    return best;
  };
  return [pick(state.xs, state.patch_w, x), pick(state.ys, state.patch_h, y)];
}

export interface OverlayModel {
  greenCells: { col: number; row: number; rect: Rect }[];
  fovRect: Rect; // purple rectangle: the current field-of-view patch
  progress: number;
}

/** Everything a renderer needs to paint the thumbnail overlay. */
export function overlayModel(state: ScreeningState): OverlayModel {
  const flags = decodeBitset(state.screened, state.cols * state.rows);
  const greenCells = [];
  for (let row = 0; row < state.rows; row++) {
    for (let col = 0; col < state.cols; col++) {
      if (flags[cellIndex(state, col, row)]) {
        greenCells.push({ col, row, rect: patchRect(state, col, row) });
      }
    }
  }
  const [col, row] = state.current;
  return { greenCells, fovRect: patchRect(state, col, row), progress: state.progress };
}

export interface ScreeningApi {
  markScreened(mapId: number, col: number, row: number): Promise<ScreeningState>;
  recordPosition(mapId: number, col: number, row: number): Promise<ScreeningState>;
}

/**
 * Tracks the viewport against the grid. On every settle it records the
 * position; entering a not-yet-screened cell also marks it. Returns the
 * freshest server state (or the old one when nothing changed).
 */
export class ScreeningTracker {
  constructor(
    private api: ScreeningApi,
    public state: ScreeningState,
  ) {}

  async onViewportSettle(viewport: Viewport): Promise<ScreeningState> {
    const [col, row] = cellForPoint(this.state, viewport.centerX, viewport.centerY);
    const [curCol, curRow] = this.state.current;
    const needsMark = !isScreened(this.state, col, row);
    const needsMove = col !== curCol || row !== curRow;
    if (needsMark) {
      this.state = await this.api.markScreened(this.state.id, col, row);
    }
    if (needsMove) {
      this.state = await this.api.recordPosition(this.state.id, col, row);
    }
    return this.state;
  }

  /** Viewport restoring the server-stored field of view exactly. */
  resumeViewport(canvasW: number, canvasH: number): Viewport {
    const [col, row] = this.state.current;
    const rect = patchRect(this.state, col, row);
    const zoom = Math.min(canvasW / this.state.patch_w, canvasH / this.state.patch_h);
    return {
      centerX: (rect.x1 + rect.x2) / 2,
      centerY: (rect.y1 + rect.y2) / 2,
      zoom,
      canvasW,
      canvasH,
    };
  }
}
