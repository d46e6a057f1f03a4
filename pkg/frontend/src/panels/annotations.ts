/**
 * Annotation panel: per-image template counts plus a search box that
 * turns free text into query parameters for the annotations endpoint
 * (template name, creator id, coordinate window).
 */

import type { Annotation, Template } from "../types.js";

export interface TemplateCount {
  template: Template;
  count: number;
}

/** Frequency of use per template on the open image. */
export function templateCounts(annotations: Annotation[], templates: Template[]): TemplateCount[] {
  const counts = new Map<number, number>();
  for (const annotation of annotations) {
    counts.set(annotation.template, (counts.get(annotation.template) ?? 0) + 1);
  }
  return templates
    .map((template) => ({ template, count: counts.get(template.id) ?? 0 }))
    .sort((a, b) => a.template.sort_order - b.template.sort_order || a.template.id - b.template.id);
}

/**
 * Parse a search box string into API query params.
 *
 * Supported tokens: `template=<name>` (resolved to its id),
 * `creator=<id>`, `verified=<true|false>`, `window=x1,y1,x2,y2`.
 * Unknown tokens are reported back instead of being silently dropped.
 */
export function parseSearch(query: string, templates: Template[],
): { params: Record<string, string | number>; errors: string[] } {
  const params: Record<string, string | number> = {};
  const errors: string[] = [];
  for (const token of query.split(/\s+/).filter(Boolean)) {
    const [key, value] = token.split("=", 2);
    if (value === undefined) {
      errors.push(`expected key=value, got '${token}'`);
      continue;
    }
    switch (key) {
      case "template": {
        const match = templates.find((t) => t.name.toLowerCase() === value.toLowerCase());
        if (match) params.template = match.id;
        else errors.push(`unknown template '${value}'`);
        break;
      }
      case "creator":
        if (/^\d+$/.test(value)) params.creator = Number(value);
        else errors.push(`creator must be a user id, got '${value}'`);
        break;
      case "verified":
        if (value === "true" || value === "false") params.verified = value;
        else errors.push("verified must be true or false");
        break;
      case "window":
        if (/^-?\d+(\.\d+)?(,-?\d+(\.\d+)?){3}$/.test(value)) params.window = value;
        else errors.push("window must be x1,y1,x2,y2");
        break;
      default:
        errors.push(`unknown filter '${key}'`);
    }
  }
  return { params, errors };
}
