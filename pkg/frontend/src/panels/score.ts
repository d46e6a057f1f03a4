/**
 * Field-of-view grade score panel: recomputes the server-side score
 * whenever the viewport settles, debounced so panning does not flood
 * the endpoint. Failures degrade to "no score" without breaking the
 * viewer (per-panel isolation).
 */

import type { Viewport } from "../transform.js";
import { visibleImageRect } from "../transform.js";

export interface ScoreApi {
  fieldOfViewScore(imageId: number,
                   rect: { x1: number; y1: number; x2: number; y2: number },
  ): Promise<number | null>;
}

export class ScorePanel {
  score: number | null = null;
  lastError: string | null = null;
  private timer: ReturnType<typeof setTimeout> | null = null;
  private generation = 0;

  constructor(
    private api: ScoreApi,
    private imageId: number,
    private debounceMs = 250,
    private onUpdate: (score: number | null) => void = () => {},
  ) {}

  /** Call on every viewport change; only the settled view hits the API. */
  viewportChanged(viewport: Viewport): void {
    if (this.timer) clearTimeout(this.timer);
    const generation = ++this.generation;
    this.timer = setTimeout(() => void this.refresh(viewport, generation), this.debounceMs);
  }

  async refresh(viewport: Viewport, generation = ++this.generation): Promise<void> {
    const rect = visibleImageRect(viewport);
    try {
      const score = await this.api.fieldOfViewScore(this.imageId, rect);
      if (generation !== this.generation) return; // stale response, a newer view settled
      this.score = score;
      this.lastError = null;
    } catch (error) {
      if (generation !== this.generation) return;
      this.score = null;
      this.lastError = error instanceof Error ? error.message : String(error);
    }
    this.onUpdate(this.score);
  }
}
