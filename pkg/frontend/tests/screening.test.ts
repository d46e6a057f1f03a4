import { describe, expect, it } from "vitest";

import {
  ScreeningTracker,
  cellForPoint,
  decodeBitset,
  isScreened,
  overlayModel,
  patchRect,
  type ScreeningApi,
} from "../src/screening.js";
import type { ScreeningState } from "../src/types.js";

// the 1000x800 / 200x200 grid the server computes: 6x5, last origins clamped
const XS = [0, 170, 340, 510, 680, 800];
const YS = [0, 170, 340, 510, 600];

function bitsetBase64(cells: number, setBits: number[]): string {
  const bytes = new Uint8Array(Math.ceil(cells / 8));
  for (const index of setBits) bytes[index >> 3] |= 1 << (index & 7);
  return Buffer.from(bytes).toString("base64");
}

function state(overrides: Partial<ScreeningState> = {}): ScreeningState {
  return {
    id: 1, image: 7, patch_w: 200, patch_h: 200, cols: 6, rows: 5,
    screened: bitsetBase64(30, []), current: [0, 0], progress: 0,
    xs: XS, ys: YS,
    ...overrides,
  };
}

describe("bitset decoding", () => {
  it("decodes the server packing (row-major, LSB-first)", () => {
    const flags = decodeBitset(bitsetBase64(30, [0, 8, 29]), 30);
    expect(flags.filter(Boolean)).toHaveLength(3);
    expect(flags[0]).toBe(true);
    expect(flags[8]).toBe(true); // cell (col 2, row 1) on a 6-wide grid
    expect(flags[29]).toBe(true);
    expect(flags[1]).toBe(false);
  });

  it("isScreened addresses cells by (col, row)", () => {
    const s = state({ screened: bitsetBase64(30, [8]) });
    expect(isScreened(s, 2, 1)).toBe(true);
    expect(isScreened(s, 1, 2)).toBe(false);
  });
});

describe("overlay model (screening UI acceptance)", () => {
  it("green overlay equals the server bitset", () => {
    const marked = [0, 7, 8, 17, 29];
    const s = state({ screened: bitsetBase64(30, marked), progress: 5 / 30 });
    const model = overlayModel(s);
    const indices = model.greenCells.map((c) => c.row * s.cols + c.col).sort((a, b) => a - b);
    expect(indices).toEqual(marked);
    expect(model.progress).toBeCloseTo(5 / 30);
    // every green rect is exactly its patch rect
    for (const cell of model.greenCells) {
      expect(cell.rect).toEqual(patchRect(s, cell.col, cell.row));
    }
  });

  it("purple rectangle tracks the server-stored current cell", () => {
    const s = state({ current: [3, 2] });
    const model = overlayModel(s);
    expect(model.fovRect).toEqual({ x1: 510, y1: 340, x2: 710, y2: 540 });
  });

  it("reload mid-screening restores the exact field of view", () => {
    // simulate a fresh client resuming from persisted server state
    const resumed = state({ current: [3, 2], screened: bitsetBase64(30, [0, 1, 2]) });
    const tracker = new ScreeningTracker({} as ScreeningApi, resumed);
    const viewport = tracker.resumeViewport(1000, 800);
    expect(viewport.centerX).toBe((510 + 710) / 2);
    expect(viewport.centerY).toBe((340 + 540) / 2);
    // the restored view frames the whole 200x200 patch
    expect(200 * viewport.zoom).toBeLessThanOrEqual(1000 + 1e-9);
    expect(200 * viewport.zoom).toBeLessThanOrEqual(800 + 1e-9);
    expect(overlayModel(tracker.state).fovRect).toEqual({ x1: 510, y1: 340, x2: 710, y2: 540 });
  });
});

describe("cellForPoint", () => {
  it("maps points to containing patches, last origin winning overlaps", () => {
    expect(cellForPoint(state(), 10, 10)).toEqual([0, 0]);
    expect(cellForPoint(state(), 175, 10)).toEqual([1, 0]); // overlap zone: later patch wins
    expect(cellForPoint(state(), 999, 799)).toEqual([5, 4]);
  });
});

describe("ScreeningTracker settle behaviour", () => {
  function fakeApi(log: string[], start: ScreeningState): ScreeningApi & { state: ScreeningState } {
    const holder = {
      state: start,
      async markScreened(mapId: number, col: number, row: number) {
        log.push(`mark ${col},${row}`);
        const cells = holder.state.cols * holder.state.rows;
        const bytes = Buffer.from(holder.state.screened, "base64");
        const index = row * holder.state.cols + col;
        bytes[index >> 3] |= 1 << (index & 7);
        const screened = Buffer.from(bytes).toString("base64");
        const marked = decodeBitset(screened, cells).filter(Boolean).length;
        holder.state = { ...holder.state, screened, progress: marked / cells };
        return holder.state;
      },
      async recordPosition(mapId: number, col: number, row: number) {
        log.push(`position ${col},${row}`);
        holder.state = { ...holder.state, current: [col, row] };
        return holder.state;
      },
    };
    return holder;
  }

  it("entering an unscreened cell marks it and records the position", async () => {
    const log: string[] = [];
    const api = fakeApi(log, state());
    const tracker = new ScreeningTracker(api, api.state);
    const next = await tracker.onViewportSettle(
      { centerX: 420, centerY: 250, zoom: 4, canvasW: 800, canvasH: 800 });
    expect(log).toEqual(["mark 2,1", "position 2,1"]);
    expect(isScreened(next, 2, 1)).toBe(true);
    expect(next.current).toEqual([2, 1]);
    expect(next.progress).toBeCloseTo(1 / 30);
  });

  it("re-entering a screened cell only moves the position", async () => {
    const log: string[] = [];
    const api = fakeApi(log, state({ screened: bitsetBase64(30, [8]) }));
    const tracker = new ScreeningTracker(api, api.state);
    await tracker.onViewportSettle(
      { centerX: 420, centerY: 250, zoom: 4, canvasW: 800, canvasH: 800 });
    expect(log).toEqual(["position 2,1"]);
  });

  it("settling inside the current screened cell is a no-op", async () => {
    const log: string[] = [];
    const api = fakeApi(log, state({ screened: bitsetBase64(30, [0]), current: [0, 0] }));
    const tracker = new ScreeningTracker(api, api.state);
    await tracker.onViewportSettle(
      { centerX: 50, centerY: 50, zoom: 4, canvasW: 800, canvasH: 800 });
    expect(log).toEqual([]);
  });
});
