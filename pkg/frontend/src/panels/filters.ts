/**
 * Image filter panel: brightness/contrast/inversion applied as a CSS
 * filter on the viewer canvas. Pure display effect; tile requests are
 * untouched, so toggling filters never refetches pixels.
 */

export interface FilterState {
  brightness: number; // 1 = neutral
  contrast: number; // 1 = neutral
  invert: boolean;
}

export const NEUTRAL_FILTERS: FilterState = { brightness: 1, contrast: 1, invert: false };

export function cssFilter(state: FilterState): string {
  const parts: string[] = [];
  if (state.brightness !== 1) parts.push(`brightness(${state.brightness})`);
  if (state.contrast !== 1) parts.push(`contrast(${state.contrast})`);
  if (state.invert) parts.push("invert(1)");
  return parts.length ? parts.join(" ") : "none";
}

export function clampFilter(state: FilterState): FilterState {
  return {
    brightness: Math.min(Math.max(state.brightness, 0), 4),
    contrast: Math.min(Math.max(state.contrast, 0), 4),
    invert: state.invert,
  };
}
