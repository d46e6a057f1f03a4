/**
 * REST client. Talks exclusively to the server's /api/v1 surface with a
 * token header; every list helper walks pagination links so callers see
 * complete sets.
 *
 * Annotation results are cached per (user, mode, image): switching the
 * set's annotation mode or the signed-in user can never surface stale
 * rows another identity was allowed to see.
 */

import type {
  Annotation,
  ImageInfo,
  ImageSetInfo,
  MediaInfo,
  Page,
  ScreeningState,
  Template,
  Vector,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    detail: string,
  ) {
    super(detail);
  }
}

export class ApiClient {
  private annotationCache = new Map<string, Annotation[]>();

  constructor(
    private baseUrl: string,
    private token: string,
    private fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
  }

  private headers(): Record<string, string> {
    return { Authorization: `Token ${this.token}`, "Content-Type": "application/json" };
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await this.fetchImpl(this.baseUrl + path, {
      method,
      headers: this.headers(),
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!response.ok) {
      let code = "HttpError";
      let detail = `${method} ${path} -> ${response.status}`;
      try {
        const payload = await response.json();
        code = payload.code ?? code;
        detail = payload.detail ?? detail;
      } catch {
        // non-JSON error body; keep defaults
      }
      throw new ApiError(response.status, code, detail);
    }
    return (await response.json()) as T;
  }

  private async walk<T>(path: string): Promise<T[]> {
    const results: T[] = [];
    let url: string | null = path;
    while (url) {
      const page: Page<T> = await this.request<Page<T>>("GET", url);
      results.push(...page.results);
      url = page.next;
    }
    return results;
  }

  // --- images & sets ---

  getImage(id: number): Promise<ImageInfo> {
    return this.request("GET", `/api/v1/images/${id}/`);
  }

  listImages(imageSet: number): Promise<ImageInfo[]> {
    return this.walk(`/api/v1/images/?image_set=${imageSet}&limit=500`);
  }

  getImageSet(id: number): Promise<ImageSetInfo> {
    return this.request("GET", `/api/v1/imagesets/${id}/`);
  }

  listTemplates(imageSet: number): Promise<Template[]> {
    return this.walk(`/api/v1/annotationtypes/?image_set=${imageSet}&limit=500`);
  }

  tileUrl(imageId: number, frame: number, level: number, col: number, row: number,
          fmt: "png" | "jpeg" = "png"): string {
    return `${this.baseUrl}/api/v1/images/${imageId}/${frame}/${level}/${col}_${row}.${fmt}`;
  }

  mediaUrl(mediaId: number): string {
    return `${this.baseUrl}/api/v1/media/${mediaId}/download`;
  }

  // --- annotations ---

  /** Cache key: user token + set mode + image. Blind-mode honesty. */
  private annotationKey(userToken: string, mode: string, imageId: number): string {
    return `${userToken}:${mode}:${imageId}`;
  }

  async listAnnotations(imageId: number, mode: string, refresh = false): Promise<Annotation[]> {
    const key = this.annotationKey(this.token, mode, imageId);
    if (!refresh && this.annotationCache.has(key)) {
      return this.annotationCache.get(key)!;
    }
    const rows = await this.walk<Annotation>(`/api/v1/annotations/?image=${imageId}&limit=1000`);
    this.annotationCache.set(key, rows);
    return rows;
  }

  invalidateAnnotations(): void {
    this.annotationCache.clear();
  }

  searchAnnotations(params: Record<string, string | number>): Promise<Annotation[]> {
    const query = Object.entries(params)
      .map(([k, v]) => `${encodeURIComponent(k)}=${encodeURIComponent(String(v))}`)
      .join("&");
    return this.walk<Annotation>(`/api/v1/annotations/?${query}&limit=1000`);
  }

  createAnnotation(imageId: number, templateId: number, vector: Vector,
                   meta: Record<string, unknown> = {}): Promise<Annotation> {
    this.invalidateAnnotations();
    return this.request("POST", "/api/v1/annotations/", {
      image: imageId, template: templateId, vector, meta,
    });
  }

  singleClick(imageId: number, templateId: number, x: number, y: number): Promise<Annotation> {
    this.invalidateAnnotations();
    return this.request("POST", "/api/v1/annotations/single_click", {
      image: imageId, template: templateId, x, y,
    });
  }

  updateAnnotation(id: number, patch: { vector?: Vector; template?: number;
                   meta?: Record<string, unknown> }): Promise<Annotation> {
    this.invalidateAnnotations();
    return this.request("PATCH", `/api/v1/annotations/${id}/`, patch);
  }

  deleteAnnotation(id: number): Promise<Annotation> {
    this.invalidateAnnotations();
    return this.request("DELETE", `/api/v1/annotations/${id}/`);
  }

  verifyAnnotation(id: number, verdict: "accept" | "reject"): Promise<unknown> {
    return this.request("POST", `/api/v1/annotations/${id}/verify`, { verdict });
  }

  listMedia(annotationId: number): Promise<MediaInfo[]> {
    return this.walk(`/api/v1/media/?annotation=${annotationId}&limit=500`);
  }

  // --- screening ---

  registerScreening(imageId: number, patchW: number, patchH: number): Promise<ScreeningState> {
    return this.request("POST", "/api/v1/screening/", {
      image: imageId, patch_w: patchW, patch_h: patchH,
    });
  }

  screeningForImage(imageId: number): Promise<ScreeningState> {
    return this.request("GET", `/api/v1/screening/?image=${imageId}`);
  }

  resumeScreening(mapId: number): Promise<ScreeningState> {
    return this.request("GET", `/api/v1/screening/${mapId}/`);
  }

  markScreened(mapId: number, col: number, row: number): Promise<ScreeningState> {
    return this.request("POST", `/api/v1/screening/${mapId}/mark`, { col, row });
  }

  recordPosition(mapId: number, col: number, row: number): Promise<ScreeningState> {
    return this.request("POST", `/api/v1/screening/${mapId}/position`, { col, row });
  }

  // --- score ---

  async fieldOfViewScore(imageId: number, rect: { x1: number; y1: number; x2: number; y2: number },
  ): Promise<number | null> {
    try {
      const body = await this.request<{ score: number }>(
        "GET",
        `/api/v1/images/${imageId}/score?x1=${rect.x1}&y1=${rect.y1}&x2=${rect.x2}&y2=${rect.y2}`,
      );
      return body.score;
    } catch (error) {
      if (error instanceof ApiError && error.code === "NoCellsInView") return null;
      throw error;
    }
  }
}

/** Runtime configuration: one JSON file, no build-time server coupling. */
export interface ClientConfig {
  apiBaseUrl: string;
}

export async function loadConfig(fetchImpl: FetchLike = (u, i) => fetch(u, i),
                                 url = "config.json"): Promise<ClientConfig> {
  const response = await fetchImpl(url);
  if (!response.ok) throw new Error(`cannot load ${url}: ${response.status}`);
  const config = (await response.json()) as ClientConfig;
  if (!config.apiBaseUrl) throw new Error("config.json must set apiBaseUrl");
  return config;
}
