/**
 * Keyboard shortcuts: each product template may bind one key that makes
 * it the active template (the paper-fast labeling loop: hover, key,
 * click). Bindings come straight from the templates of the open set.
 */

import type { Template } from "./types.js";

export class ShortcutMap {
  private byKey = new Map<string, Template>();

  constructor(templates: Template[]) {
    for (const template of [...templates].sort((a, b) => a.sort_order - b.sort_order)) {
      if (template.shortcut && !this.byKey.has(template.shortcut.toLowerCase())) {
        this.byKey.set(template.shortcut.toLowerCase(), template);
      }
    }
  }

  lookup(key: string): Template | null {
    return this.byKey.get(key.toLowerCase()) ?? null;
  }

  entries(): [string, Template][] {
    return [...this.byKey.entries()];
  }
}

export interface KeyEventLike {
  key: string;
  ctrlKey?: boolean;
  metaKey?: boolean;
  altKey?: boolean;
  target?: unknown;
}

/** Template for a key event, ignoring chords and typing into inputs. */
export function templateForKey(map: ShortcutMap, event: KeyEventLike): Template | null {
  if (event.ctrlKey || event.metaKey || event.altKey) return null;
  const tag = (event.target as { tagName?: string } | null | undefined)?.tagName?.toUpperCase();
  if (tag === "INPUT" || tag === "TEXTAREA" || tag === "SELECT") return null;
  if (event.key.length !== 1) return null;
  return map.lookup(event.key);
}
