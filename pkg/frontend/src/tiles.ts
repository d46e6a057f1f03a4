/**
 * Deep-zoom tile math and loading.
 *
 * Levels follow the server's ceil-halving recurrence, so the client can
 * derive every level's grid from the image dimensions alone (needed for
 * remote/federated images where only dims are mirrored). Loading runs
 * through a small LRU cache with at most 6 requests in flight;
 * everything scheduled for tiles that scrolled off the viewport is
 * cancelled.
 */

import type { Viewport } from "./transform.js";
import { visibleImageRect } from "./transform.js";

export const TILE_SIZE = 256;

export function maxLevel(width: number, height: number): number {
  return Math.ceil(Math.log2(Math.max(width, height, 1))) || 0;
}

export function levelDims(width: number, height: number, level: number): [number, number] {
  const top = maxLevel(width, height);
  if (level < 0 || level > top) throw new RangeError(`level ${level} outside 0..${top}`);
  let w = width;
  let h = height;
  for (let i = top; i > level; i--) {
    w = Math.ceil(w / 2);
    h = Math.ceil(h / 2);
  }
  return [w, h];
}

/** Finest level whose pixels are not denser than the screen needs. */
export function levelForZoom(width: number, height: number, zoom: number): number {
  const top = maxLevel(width, height);
  if (zoom >= 1) return top;
  const drop = Math.floor(Math.log2(1 / zoom));
  return Math.max(0, top - drop);
}

export interface TileAddress {
  imageId: number;
  frame: number;
  level: number;
  col: number;
  row: number;
}

export function tileKey(a: TileAddress): string {
  return `${a.imageId}/${a.frame}/${a.level}/${a.col}_${a.row}`;
}

/** Tiles of `level` intersecting the viewport, centre-out so the middle loads first. */
export function visibleTiles(viewport: Viewport, imageW: number, imageH: number,
                             imageId: number, frame = 0): TileAddress[] {
  const level = levelForZoom(imageW, imageH, viewport.zoom);
  const [lw, lh] = levelDims(imageW, imageH, level);
  const scale = lw / imageW; // level px per image px
  const rect = visibleImageRect(viewport);
  const colMin = Math.max(0, Math.floor((rect.x1 * scale) / TILE_SIZE));
  const rowMin = Math.max(0, Math.floor((rect.y1 * scale) / TILE_SIZE));
  const colMax = Math.min(Math.ceil(lw / TILE_SIZE) - 1, Math.floor((rect.x2 * scale) / TILE_SIZE));
  const rowMax = Math.min(Math.ceil(lh / TILE_SIZE) - 1, Math.floor((rect.y2 * scale) / TILE_SIZE));
  const tiles: TileAddress[] = [];
  for (let row = rowMin; row <= rowMax; row++) {
    for (let col = colMin; col <= colMax; col++) {
      tiles.push({ imageId, frame, level, col, row });
    }
  }
  const cx = (colMin + colMax) / 2;
  const cy = (rowMin + rowMax) / 2;
  tiles.sort((a, b) =>
    (Math.abs(a.col - cx) + Math.abs(a.row - cy)) - (Math.abs(b.col - cx) + Math.abs(b.row - cy)));
  return tiles;
}

export class LruCache<V> {
  private entries = new Map<string, V>();

  constructor(private capacity: number) {}

  get(key: string): V | undefined {
    const value = this.entries.get(key);
    if (value !== undefined) {
      this.entries.delete(key);
      this.entries.set(key, value); // refresh recency
    }
    return value;
  }

  set(key: string, value: V): void {
    this.entries.delete(key);
    this.entries.set(key, value);
    while (this.entries.size > this.capacity) {
      const oldest = this.entries.keys().next().value as string;
      this.entries.delete(oldest);
    }
  }

  has(key: string): boolean {
    return this.entries.has(key);
  }

  get size(): number {
    return this.entries.size;
  }
}

export type TileFetcher = (address: TileAddress, signal: AbortSignal) => Promise<unknown>;

interface PendingTile {
  address: TileAddress;
  controller: AbortController;
  resolve: (value: unknown) => void;
  reject: (reason: unknown) => void;
  started: boolean;
}

/** Queue with a hard in-flight cap and off-viewport cancellation. */
export class TileLoader {
  readonly cache: LruCache<unknown>;
  private queue: PendingTile[] = [];
  private inFlight = new Map<string, PendingTile>();

  constructor(
    private fetcher: TileFetcher,
    private maxConcurrent = 6,
    cacheCapacity = 256,
  ) {
    this.cache = new LruCache(cacheCapacity);
  }

  get inFlightCount(): number {
    return this.inFlight.size;
  }

  get queuedCount(): number {
    return this.queue.length;
  }

  request(address: TileAddress): Promise<unknown> {
    const key = tileKey(address);
    const cached = this.cache.get(key);
    if (cached !== undefined) return Promise.resolve(cached);
    const existing = this.inFlight.get(key) ?? this.queue.find((p) => tileKey(p.address) === key);
    if (existing) {
      return new Promise((resolve, reject) => {
        const prevResolve = existing.resolve;
        const prevReject = existing.reject;
        existing.resolve = (v) => { prevResolve(v); resolve(v); };
        existing.reject = (e) => { prevReject(e); reject(e); };
      });
    }
    return new Promise((resolve, reject) => {
      this.queue.push({ address, controller: new AbortController(), resolve, reject,
                        started: false });
      this.pump();
    });
  }

  /** Abort every queued or running request outside the wanted set. */
  cancelExcept(wanted: TileAddress[]): void {
    const keep = new Set(wanted.map(tileKey));
    this.queue = this.queue.filter((pending) => {
      if (keep.has(tileKey(pending.address))) return true;
      pending.reject(new DOMException("superseded", "AbortError"));
      return false;
    });
    for (const [key, pending] of [...this.inFlight]) {
      if (!keep.has(key)) pending.controller.abort();
    }
  }

  private pump(): void {
    while (this.inFlight.size < this.maxConcurrent && this.queue.length > 0) {
      const pending = this.queue.shift()!;
      const key = tileKey(pending.address);
      pending.started = true;
      this.inFlight.set(key, pending);
      this.fetcher(pending.address, pending.controller.signal)
        .then((value) => {
          this.cache.set(key, value);
          pending.resolve(value);
        })
        .catch((error) => pending.reject(error))
        .finally(() => {
          this.inFlight.delete(key);
          this.pump();
        });
    }
  }
}
