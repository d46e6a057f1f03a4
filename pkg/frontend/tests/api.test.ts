import { describe, expect, it } from "vitest";

import { ApiClient, ApiError, loadConfig, type FetchLike } from "../src/api.js";
import type { Annotation } from "../src/types.js";

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

function annotation(id: number): Annotation {
  return {
    id, image: 1, template: 1, vector: { x1: 0, y1: 0, x2: 5, y2: 5 },
    creator: 1, last_editor: 1, created_at: "", updated_at: "", meta: {},
    deleted: false, verifications: [], media_ids: [],
  };
}

describe("ApiClient", () => {
  it("sends the token header and walks pagination links", async () => {
    const seen: string[] = [];
    const fetchMock: FetchLike = async (url, init) => {
      seen.push(url);
      expect((init?.headers as Record<string, string>).Authorization).toBe("Token sekret");
      if (url.endsWith("offset=2")) {
        return jsonResponse({ count: 3, next: null, previous: null,
                              results: [annotation(3)] });
      }
      return jsonResponse({
        count: 3,
        next: "/api/v1/annotations/?image=1&limit=2&offset=2",
        previous: null,
        results: [annotation(1), annotation(2)],
      });
    };
    const api = new ApiClient("http://server", "sekret", fetchMock);
    const rows = await api.listAnnotations(1, "cooperative");
    expect(rows.map((r) => r.id)).toEqual([1, 2, 3]);
    expect(seen[0]).toBe("http://server/api/v1/annotations/?image=1&limit=1000");
  });

  it("caches annotations per (user, mode, image) - blind-mode honesty", async () => {
    let fetches = 0;
    const fetchMock: FetchLike = async () => {
      fetches += 1;
      return jsonResponse({ count: 1, next: null, previous: null, results: [annotation(fetches)] });
    };
    const api = new ApiClient("http://server", "tok", fetchMock);
    await api.listAnnotations(1, "cooperative");
    await api.listAnnotations(1, "cooperative"); // cached
    expect(fetches).toBe(1);
    await api.listAnnotations(1, "blind"); // mode switch: never reuse the old cache
    expect(fetches).toBe(2);
    const other = new ApiClient("http://server", "other-user", fetchMock);
    await other.listAnnotations(1, "blind"); // different identity: own cache
    expect(fetches).toBe(3);
  });

  it("invalidates the cache after writes", async () => {
    let fetches = 0;
    const fetchMock: FetchLike = async (url, init) => {
      if (init?.method === "POST") return jsonResponse(annotation(9));
      fetches += 1;
      return jsonResponse({ count: 0, next: null, previous: null, results: [] });
    };
    const api = new ApiClient("http://server", "tok", fetchMock);
    await api.listAnnotations(1, "cooperative");
    await api.createAnnotation(1, 1, { x1: 0, y1: 0, x2: 5, y2: 5 });
    await api.listAnnotations(1, "cooperative");
    expect(fetches).toBe(2);
  });

  it("raises typed errors with the server's code", async () => {
    const fetchMock: FetchLike = async () =>
      jsonResponse({ detail: "nope", code: "PermissionDenied" }, 403);
    const api = new ApiClient("http://server", "tok", fetchMock);
    await expect(api.getImage(1)).rejects.toMatchObject({
      status: 403, code: "PermissionDenied",
    });
  });

  it("maps NoCellsInView to a null score", async () => {
    const fetchMock: FetchLike = async () =>
      jsonResponse({ detail: "empty", code: "NoCellsInView" }, 404);
    const api = new ApiClient("http://server", "tok", fetchMock);
    expect(await api.fieldOfViewScore(1, { x1: 0, y1: 0, x2: 10, y2: 10 })).toBeNull();
  });

  it("builds tile and media urls", () => {
    const api = new ApiClient("http://server/", "tok", async () => jsonResponse({}));
    expect(api.tileUrl(7, 0, 10, 3, 2)).toBe("http://server/api/v1/images/7/0/10/3_2.png");
    expect(api.mediaUrl(4)).toBe("http://server/api/v1/media/4/download");
  });
});

describe("loadConfig", () => {
  it("loads the api base url from config.json", async () => {
    const fetchMock: FetchLike = async () => jsonResponse({ apiBaseUrl: "http://api" });
    expect(await loadConfig(fetchMock)).toEqual({ apiBaseUrl: "http://api" });
  });

  it("rejects configs without an api base url", async () => {
    const fetchMock: FetchLike = async () => jsonResponse({});
    await expect(loadConfig(fetchMock)).rejects.toThrow(/apiBaseUrl/);
  });
});
