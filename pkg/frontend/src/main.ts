/**
 * Browser bootstrap: loads config.json, signs in with a stored token,
 * and wires the viewer, tools, panels, and screening overlay together.
 * All coordination logic lives in the imported modules; this file only
 * touches the DOM.
 */

import { ApiClient, loadConfig } from "./api.js";
import { DrawingTool, singleClickPreview } from "./drawing.js";
import { NEUTRAL_FILTERS, cssFilter, type FilterState } from "./panels/filters.js";
import { parseSearch, templateCounts } from "./panels/annotations.js";
import { playable } from "./panels/media.js";
import { ScorePanel } from "./panels/score.js";
import { ScreeningTracker, overlayModel } from "./screening.js";
import { ShortcutMap, templateForKey } from "./shortcuts.js";
import { TileLoader, visibleTiles } from "./tiles.js";
import { panBy, zoomAt, type Viewport } from "./transform.js";
import { renderAnnotation, renderScreeningOverlay, renderTiles } from "./viewer.js";
import type { Annotation, ImageInfo, ImageSetInfo, Template } from "./types.js";

interface AppState {
  api: ApiClient;
  image: ImageInfo;
  imageSet: ImageSetInfo;
  templates: Template[];
  annotations: Annotation[];
  viewport: Viewport;
  tool: DrawingTool;
  shortcuts: ShortcutMap;
  filters: FilterState;
  tracker: ScreeningTracker | null;
}

function $(id: string): HTMLElement {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing #${id}`);
  return el;
}

async function boot(): Promise<void> {
  const config = await loadConfig();
  const token = localStorage.getItem("slidehub-token")
    ?? window.prompt("API token") ?? "";
  localStorage.setItem("slidehub-token", token);
  const api = new ApiClient(config.apiBaseUrl, token);

  const params = new URLSearchParams(window.location.search);
  const imageId = Number(params.get("image") ?? "1");
  const image = await api.getImage(imageId);
  const imageSet = await api.getImageSet(image.image_set);
  const templates = await api.listTemplates(imageSet.id);
  const annotations = await api.listAnnotations(image.id, imageSet.mode);

  const canvas = $("viewer") as HTMLCanvasElement;
  const thumb = $("thumbnail") as HTMLCanvasElement;
  // the render helpers take a structural subset of the 2D context
  const ctx = canvas.getContext("2d")! as unknown as import("./viewer.js").DrawContext;
  const thumbCtx = thumb.getContext("2d")! as unknown as import("./viewer.js").DrawContext;

  const state: AppState = {
    api, image, imageSet, templates, annotations,
    viewport: {
      centerX: image.width / 2, centerY: image.height / 2,
      zoom: Math.min(canvas.width / image.width, canvas.height / image.height),
      canvasW: canvas.width, canvasH: canvas.height,
    },
    tool: new DrawingTool(image.width, image.height),
    shortcuts: new ShortcutMap(templates),
    filters: { ...NEUTRAL_FILTERS },
    tracker: null,
  };

  const loader = new TileLoader(async (address, signal) => {
    const response = await fetch(
      api.tileUrl(address.imageId, address.frame, address.level, address.col, address.row),
      { headers: { Authorization: `Token ${token}` }, signal },
    );
    if (!response.ok) throw new Error(`tile ${response.status}`);
    return createImageBitmap(await response.blob());
  });

  const scorePanel = new ScorePanel(api, image.id, 250, (score) => {
    $("score").textContent = score === null ? "no graded cells in view" : score.toFixed(1);
  });

  const templateById = new Map(templates.map((t) => [t.id, t]));

  function redraw(): void {
    canvas.style.filter = cssFilter(state.filters);
    const missing = renderTiles(ctx, loader.cache, state.viewport,
                                image.width, image.height, image.id);
    const wanted = visibleTiles(state.viewport, image.width, image.height, image.id);
    loader.cancelExcept(wanted);
    for (const tile of missing) {
      loader.request(tile).then(redraw, () => undefined);
    }
    for (const annotation of state.annotations) {
      renderAnnotation(ctx, annotation, templateById.get(annotation.template), state.viewport);
    }
    if (state.tracker) {
      thumbCtx.clearRect(0, 0, thumb.width, thumb.height);
      renderScreeningOverlay(thumbCtx, overlayModel(state.tracker.state),
                             image.width, image.height, thumb.width, thumb.height);
      $("progress").textContent =
        `${(state.tracker.state.progress * 100).toFixed(1)}% screened`;
    }
    renderPanels();
  }

  function renderPanels(): void {
    try {
      const counts = templateCounts(state.annotations, state.templates);
      $("templates").innerHTML = counts
        .map(({ template, count }) =>
          `<li data-template="${template.id}">` +
          `<span style="color:${template.color}">&#9632;</span> ` +
          `${template.name} (${count})` +
          (template.shortcut ? ` [${template.shortcut}]` : "") + `</li>`)
        .join("");
    } catch {
      /* panel isolation: a broken panel never breaks the viewer */
    }
  }

  async function settled(): Promise<void> {
    scorePanel.viewportChanged(state.viewport);
    if (state.tracker) {
      await state.tracker.onViewportSettle(state.viewport);
      redraw();
    }
  }

  // --- pointer wiring ---
  let dragging = false;
  let last = { x: 0, y: 0 };
  canvas.addEventListener("pointerdown", (event) => {
    const point = { x: event.offsetX, y: event.offsetY };
    if (state.tool.mode === "pan") {
      dragging = true;
      last = point;
    } else if (state.tool.mode === "single_click" && state.tool.activeTemplate) {
      const template = state.tool.activeTemplate;
      const preview = singleClickPreview(template, point, image.width, image.height);
      void api.singleClick(image.id, template.id, point.x, point.y).then(async () => {
        state.annotations = await api.listAnnotations(image.id, imageSet.mode, true);
        redraw();
      });
      if (preview) redraw();
    } else {
      state.tool.pointerDown(point, state.viewport);
    }
  });
  canvas.addEventListener("pointermove", (event) => {
    const point = { x: event.offsetX, y: event.offsetY };
    if (dragging) {
      state.viewport = panBy(state.viewport, point.x - last.x, point.y - last.y);
      last = point;
      redraw();
    } else {
      state.tool.pointerMove(point, state.viewport);
    }
  });
  canvas.addEventListener("pointerup", async (event) => {
    if (dragging) {
      dragging = false;
      await settled();
      return;
    }
    const result = state.tool.pointerUp({ x: event.offsetX, y: event.offsetY }, state.viewport);
    if (result && state.tool.activeTemplate) {
      await api.createAnnotation(image.id, state.tool.activeTemplate.id, result.vector);
      state.annotations = await api.listAnnotations(image.id, imageSet.mode, true);
      redraw();
    }
  });
  canvas.addEventListener("dblclick", async () => {
    const result = state.tool.closePolygon();
    if (result && state.tool.activeTemplate) {
      await api.createAnnotation(image.id, state.tool.activeTemplate.id, result.vector);
      state.annotations = await api.listAnnotations(image.id, imageSet.mode, true);
      redraw();
    }
  });
  canvas.addEventListener("wheel", async (event) => {
    event.preventDefault();
    const factor = event.deltaY < 0 ? 1.2 : 1 / 1.2;
    state.viewport = zoomAt(state.viewport, factor, { x: event.offsetX, y: event.offsetY });
    redraw();
    await settled();
  });
  window.addEventListener("keydown", (event) => {
    const template = templateForKey(state.shortcuts, event);
    if (template) {
      state.tool.activeTemplate = template;
      state.tool.setMode(template.default_width != null ? "single_click"
        : template.vector_kind === "polygon" ? "draw_polygon"
        : template.vector_kind === "line" ? "draw_line"
        : template.vector_kind === "circle" ? "draw_circle" : "draw_box");
      event.preventDefault();
    }
  });

  // --- screening ---
  ($("screen-start") as HTMLButtonElement).addEventListener("click", async () => {
    const patch = Math.round(Math.min(canvas.width, canvas.height) / state.viewport.zoom);
    let screening;
    try {
      screening = await api.screeningForImage(image.id);
    } catch {
      screening = await api.registerScreening(image.id, patch, patch);
    }
    state.tracker = new ScreeningTracker(api, screening);
    state.viewport = state.tracker.resumeViewport(canvas.width, canvas.height);
    redraw();
  });

  // --- filter panel ---
  for (const key of ["brightness", "contrast"] as const) {
    ($(key) as HTMLInputElement).addEventListener("input", (event) => {
      state.filters[key] = Number((event.target as HTMLInputElement).value);
      redraw(); // css-only: no tile refetch
    });
  }
  ($("invert") as HTMLInputElement).addEventListener("change", (event) => {
    state.filters.invert = (event.target as HTMLInputElement).checked;
    redraw();
  });

  // --- search panel ---
  ($("search") as HTMLInputElement).addEventListener("change", async (event) => {
    const { params: searchParams, errors } = parseSearch(
      (event.target as HTMLInputElement).value, state.templates);
    $("search-errors").textContent = errors.join("; ");
    if (!errors.length) {
      const rows = await api.searchAnnotations({ image: image.id, ...searchParams });
      $("search-results").textContent = `${rows.length} matches`;
      for (const row of rows.slice(0, 1)) {
        const media = playable(await api.listMedia(row.id), (id) => api.mediaUrl(id));
        $("media").innerHTML = media
          .map((m) => m.kind === "audio" ? `<audio controls src="${m.url}"></audio>`
            : m.kind === "video" ? `<video controls width="240" src="${m.url}"></video>`
            : m.kind === "image" ? `<img width="240" src="${m.url}">`
            : `<a href="${m.url}">${m.name}</a>`)
          .join("");
      }
    }
  });

  redraw();
  await settled();
}

boot().catch((error) => {
  document.body.textContent = `failed to start: ${error}`;
});
