import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { parseSearch, templateCounts } from "../src/panels/annotations.js";
import { NEUTRAL_FILTERS, clampFilter, cssFilter } from "../src/panels/filters.js";
import { mediaKind, playable } from "../src/panels/media.js";
import { ScorePanel } from "../src/panels/score.js";
import { ShortcutMap, templateForKey } from "../src/shortcuts.js";
import type { Annotation, Template } from "../src/types.js";

function template(id: number, name: string, shortcut: string | null = null,
                  sortOrder = 0): Template {
  return {
    id, name, vector_kind: "box", color: "#112233", shortcut,
    sort_order: sortOrder, default_width: 40, default_height: 40,
  };
}

function annotation(id: number, templateId: number): Annotation {
  return {
    id, image: 1, template: templateId, vector: { x1: 0, y1: 0, x2: 5, y2: 5 },
    creator: 1, last_editor: 1, created_at: "", updated_at: "", meta: {},
    deleted: false, verifications: [], media_ids: [],
  };
}

describe("image filters", () => {
  it("neutral state renders as none (pure display, no refetch)", () => {
    expect(cssFilter(NEUTRAL_FILTERS)).toBe("none");
  });

  it("combines adjustments in a stable order", () => {
    expect(cssFilter({ brightness: 1.5, contrast: 0.8, invert: true }))
      .toBe("brightness(1.5) contrast(0.8) invert(1)");
    expect(cssFilter({ brightness: 1, contrast: 1, invert: true })).toBe("invert(1)");
  });

  it("clamps runaway slider values", () => {
    expect(clampFilter({ brightness: 99, contrast: -1, invert: false }))
      .toEqual({ brightness: 4, contrast: 0, invert: false });
  });
});

describe("annotation panel", () => {
  const templates = [template(1, "cell", "c", 1), template(2, "vessel", "v", 0)];

  it("counts template usage and keeps product sort order", () => {
    const counts = templateCounts(
      [annotation(1, 1), annotation(2, 1), annotation(3, 2)], templates);
    expect(counts.map((c) => [c.template.name, c.count])).toEqual([["vessel", 1], ["cell", 2]]);
  });

  it("parses searches into API params", () => {
    const { params, errors } = parseSearch("template=Cell verified=true window=0,0,10,10",
                                           templates);
    expect(errors).toEqual([]);
    expect(params).toEqual({ template: 1, verified: "true", window: "0,0,10,10" });
  });

  it("reports bad tokens instead of dropping them", () => {
    const { errors } = parseSearch("template=unknown creator=bob windows=1", templates);
    expect(errors).toHaveLength(3);
  });
});

describe("media panel", () => {
  it("classifies attachments by mime type", () => {
    expect(mediaKind("audio/wav")).toBe("audio");
    expect(mediaKind("video/mp4")).toBe("video");
    expect(mediaKind("image/png")).toBe("image");
    expect(mediaKind("application/pdf")).toBe("other");
  });

  it("builds playable entries with download urls", () => {
    const [entry] = playable(
      [{ id: 9, annotation: 3, mime_type: "audio/wav", name: "call.wav" }],
      (id) => `/api/v1/media/${id}/download`);
    expect(entry.kind).toBe("audio");
    expect(entry.url).toBe("/api/v1/media/9/download");
  });
});

describe("shortcuts", () => {
  const map = new ShortcutMap([template(1, "cell", "c"), template(2, "vessel", "v")]);

  it("activates templates by key, case-insensitive", () => {
    expect(templateForKey(map, { key: "C" })?.id).toBe(1);
    expect(templateForKey(map, { key: "v" })?.id).toBe(2);
    expect(templateForKey(map, { key: "x" })).toBeNull();
  });

  it("ignores chords and typing into form fields", () => {
    expect(templateForKey(map, { key: "c", ctrlKey: true })).toBeNull();
    expect(templateForKey(map, { key: "c", target: { tagName: "INPUT" } })).toBeNull();
    expect(templateForKey(map, { key: "Enter" })).toBeNull();
  });
});

describe("score panel", () => {
  beforeEach(() => vi.useFakeTimers());
  afterEach(() => vi.useRealTimers());

  const viewport = { centerX: 500, centerY: 400, zoom: 1, canvasW: 100, canvasH: 100 };

  it("debounces viewport changes down to one request", async () => {
    const calls: unknown[] = [];
    const panel = new ScorePanel({
      async fieldOfViewScore(imageId, rect) {
        calls.push(rect);
        return 200;
      },
    }, 1, 250);
    panel.viewportChanged(viewport);
    panel.viewportChanged(viewport);
    panel.viewportChanged({ ...viewport, centerX: 600 });
    await vi.advanceTimersByTimeAsync(300);
    expect(calls).toHaveLength(1);
    expect(panel.score).toBe(200);
  });

  it("degrades to no score when the view has no graded cells", async () => {
    const panel = new ScorePanel({ async fieldOfViewScore() { return null; } }, 1, 0);
    await panel.refresh(viewport);
    expect(panel.score).toBeNull();
    expect(panel.lastError).toBeNull();
  });

  it("captures failures without throwing (panel isolation)", async () => {
    const panel = new ScorePanel({
      async fieldOfViewScore() { throw new Error("boom"); },
    }, 1, 0);
    await panel.refresh(viewport);
    expect(panel.score).toBeNull();
    expect(panel.lastError).toBe("boom");
  });

  it("drops stale responses when a newer view settled", async () => {
    let resolveFirst: (v: number | null) => void = () => {};
    let call = 0;
    const panel = new ScorePanel({
      fieldOfViewScore() {
        call += 1;
        if (call === 1) return new Promise((resolve) => { resolveFirst = resolve; });
        return Promise.resolve(300);
      },
    }, 1, 0);
    const first = panel.refresh(viewport);
    const second = panel.refresh({ ...viewport, centerX: 999 });
    await second;
    resolveFirst(100); // stale
    await first;
    expect(panel.score).toBe(300);
  });
});
