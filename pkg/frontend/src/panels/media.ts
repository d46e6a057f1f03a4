/** Media panel: plays attachments (sound, video, image) of an annotation. */

import type { MediaInfo } from "../types.js";

export type MediaKind = "audio" | "video" | "image" | "other";

export function mediaKind(mime: string): MediaKind {
  if (mime.startsWith("audio/")) return "audio";
  if (mime.startsWith("video/")) return "video";
  if (mime.startsWith("image/")) return "image";
  return "other";
}

export interface PlayableMedia extends MediaInfo {
  kind: MediaKind;
  url: string;
}

export function playable(media: MediaInfo[], urlFor: (id: number) => string): PlayableMedia[] {
  return media.map((m) => ({ ...m, kind: mediaKind(m.mime_type), url: urlFor(m.id) }));
}
