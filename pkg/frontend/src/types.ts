/** Shared wire types mirroring the server's REST schemas. */

export interface Page<T> {
  count: number;
  next: string | null;
  previous: string | null;
  results: T[];
}

export interface ImageInfo {
  id: number;
  name: string; // pseudonymized public name; the private filename never reaches clients
  width: number;
  height: number;
  frame_count: number;
  image_set: number;
  owner_instance: string | null;
}

export interface ImageSetInfo {
  id: number;
  name: string;
  team: number;
  description: string;
  product_ids: number[];
  image_ids: number[];
  is_virtual: boolean;
  mode: "cooperative" | "blind" | "second_opinion";
  required_verifications: number;
}

export type VectorKind = "box" | "polygon" | "line" | "circle" | "global";

/** Flat coordinate object: x1,y1,x2,y2,... (empty for global labels). */
export type Vector = Record<string, number>;

export interface Template {
  id: number;
  name: string;
  vector_kind: VectorKind;
  color: string;
  shortcut: string | null;
  sort_order: number;
  default_width: number | null;
  default_height: number | null;
}

export interface Verification {
  user: number;
  verdict: "accept" | "reject";
  timestamp: string;
}

export interface Annotation {
  id: number;
  image: number;
  template: number;
  vector: Vector;
  creator: number;
  last_editor: number;
  created_at: string;
  updated_at: string;
  meta: Record<string, unknown>;
  deleted: boolean;
  verifications: Verification[];
  media_ids: number[];
}

export interface MediaInfo {
  id: number;
  annotation: number;
  mime_type: string;
  name: string;
}

export interface ScreeningState {
  id: number;
  image: number;
  patch_w: number;
  patch_h: number;
  cols: number;
  rows: number;
  screened: string; // base64 bitset, row-major, LSB-first per byte
  current: [number, number];
  progress: number;
  xs: number[];
  ys: number[];
  current_rect?: number[];
}

export interface Point {
  x: number;
  y: number;
}

export interface Rect {
  x1: number;
  y1: number;
  x2: number;
  y2: number;
}
