"""Tile pyramids: ceil-halved levels cut into fixed 256px tiles.

On-disk layout (one directory per image, atomically published):

    {storage_root}/{image_id}/meta.json
    {storage_root}/{image_id}/{frame}/{level}/{col}_{row}.png

Level ``max_level`` holds the source pixels; each level below is the 2x2
box-filter average of the one above, down to 1x1 at level 0.  Tiles are
materialized at ingest so reads are constant-latency file lookups.
"""

from __future__ import annotations

import io
import json
import os
import shutil
import tempfile
import uuid
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, ImageSequence

from slidehub import errors

TILE_SIZE = 256

Image.MAX_IMAGE_PIXELS = None  # gigapixel inputs are the point


def pyramid_max_level(width: int, height: int) -> int:
    """ceil(log2(max(width, height))), exactly, via bit length."""
    return (max(width, height) - 1).bit_length()


def level_dimensions(width: int, height: int, level: int) -> tuple:
    """Dimensions of a pyramid level by repeated ceil-halving from the top."""
    top = pyramid_max_level(width, height)
    if not 0 <= level <= top:
        raise errors.LevelOutOfRange(f"level {level} outside 0..{top}")
    w, h = width, height
    for _ in range(top - level):
        w = (w + 1) // 2
        h = (h + 1) // 2
    return w, h


def grid_shape(level_w: int, level_h: int) -> tuple:
    """(cols, rows) of the tile grid covering a level."""
    return (level_w + TILE_SIZE - 1) // TILE_SIZE, (level_h + TILE_SIZE - 1) // TILE_SIZE


@dataclass
class Pyramid:
    image_id: int
    width: int
    height: int
    frame_count: int
    max_level: int
    tile_size: int = TILE_SIZE

    @property
    def level_dims(self) -> list:
        return [level_dimensions(self.width, self.height, lv) for lv in range(self.max_level + 1)]


def decode_image_bytes(data: bytes) -> list:
    """Decode raster bytes into RGB frame arrays (multi-page TIFF = frames).

    Raises DecodeError for anything Pillow cannot parse.
    """
    try:
        with Image.open(io.BytesIO(data)) as img:
            frames = [np.asarray(page.convert("RGB")) for page in ImageSequence.Iterator(img)]
    except Exception as exc:
        raise errors.DecodeError(f"cannot decode image: {exc}") from exc
    if not frames:
        raise errors.DecodeError("image holds no frames")
    return frames


def _halve(arr: np.ndarray) -> np.ndarray:
    """2x2 box-filter downscale with ceil-halved output dimensions.

    Edge blocks on odd dimensions average only the pixels that exist;
    integer round-half-up keeps the result deterministic everywhere.
    """
    h, w, c = arr.shape
    out_h, out_w = (h + 1) // 2, (w + 1) // 2
    sums = np.zeros((out_h, out_w, c), dtype=np.uint32)
    counts = np.zeros((out_h, out_w, 1), dtype=np.uint32)
    for dy in (0, 1):
        for dx in (0, 1):
            sub = arr[dy::2, dx::2]
            sums[: sub.shape[0], : sub.shape[1]] += sub
            counts[: sub.shape[0], : sub.shape[1]] += 1
    return ((sums + counts // 2) // counts).astype(np.uint8)


def _encode_png(arr: np.ndarray) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(arr).save(buf, format="PNG")
    return buf.getvalue()


class TileEngine:
    """Builds and serves per-image tile pyramids under a storage root."""

    def __init__(self, storage_root):
        self.root = Path(storage_root)
        self.root.mkdir(parents=True, exist_ok=True)

    # --- paths ---

    def image_dir(self, image_id: int) -> Path:
        return self.root / str(image_id)

    def tile_path(self, image_id: int, frame: int, level: int, col: int, row: int) -> Path:
        return self.image_dir(image_id) / str(frame) / str(level) / f"{col}_{row}.png"

    # --- ingest ---

    def build_pyramid(self, pixels: np.ndarray, image_id: int) -> Pyramid:
        """Materialize every level for a single-frame image."""
        return self.ingest_frames([pixels], image_id)

    def ingest_frames(self, frames: list, image_id: int) -> Pyramid:
        """Materialize one pyramid per frame; frames must share dimensions.

        The image directory appears atomically: tiles are written to a
        scratch directory and renamed into place only when complete.
        """
        if not frames:
            raise errors.DecodeError("no frames to ingest")
        shapes = {f.shape[:2] for f in frames}
        if len(shapes) > 1:
            raise errors.DimensionMismatch(f"frames differ in size: {sorted(shapes)}")
        height, width = frames[0].shape[:2]
        if width < 1 or height < 1:
            raise errors.DecodeError("empty raster")

        top = pyramid_max_level(width, height)
        scratch = self.root / f".build-{image_id}-{uuid.uuid4().hex}"
        try:
            for frame_index, frame in enumerate(frames):
                arr = np.ascontiguousarray(frame, dtype=np.uint8)
                if arr.ndim == 2:
                    arr = np.repeat(arr[:, :, None], 3, axis=2)
                for level in range(top, -1, -1):
                    self._write_level(scratch / str(frame_index) / str(level), arr)
                    if level > 0:
                        arr = _halve(arr)
            meta = {
                "width": width,
                "height": height,
                "frame_count": len(frames),
                "max_level": top,
                "tile_size": TILE_SIZE,
            }
            (scratch / "meta.json").write_text(json.dumps(meta))
            final = self.image_dir(image_id)
            if final.exists():
                shutil.rmtree(final)
            os.replace(scratch, final)
        except OSError as exc:
            shutil.rmtree(scratch, ignore_errors=True)
            raise errors.StorageError(f"pyramid write failed: {exc}") from exc
        except Exception:
            shutil.rmtree(scratch, ignore_errors=True)
            raise
        return Pyramid(image_id, width, height, len(frames), top)

    def _write_level(self, level_dir: Path, arr: np.ndarray) -> None:
        level_dir.mkdir(parents=True, exist_ok=True)
        h, w = arr.shape[:2]
        cols, rows = grid_shape(w, h)
        for row in range(rows):
            for col in range(cols):
                tile = arr[
                    row * TILE_SIZE : min((row + 1) * TILE_SIZE, h),
                    col * TILE_SIZE : min((col + 1) * TILE_SIZE, w),
                ]
                (level_dir / f"{col}_{row}.png").write_bytes(_encode_png(tile))

    def remove(self, image_id: int) -> None:
        shutil.rmtree(self.image_dir(image_id), ignore_errors=True)

    # --- reads ---

    def pyramid(self, image_id: int) -> Pyramid:
        meta_path = self.image_dir(image_id) / "meta.json"
        try:
            meta = json.loads(meta_path.read_text())
        except FileNotFoundError:
            raise errors.ImageNotFound(f"no pyramid for image {image_id}") from None
        return Pyramid(
            image_id, meta["width"], meta["height"], meta["frame_count"], meta["max_level"]
        )

    def get_tile(self, image_id: int, frame: int, level: int, col: int, row: int, fmt: str = "png"):
        """Tile bytes + content type.  Edge tiles are smaller than 256px.

        PNG bytes are served verbatim from storage (deterministic); jpeg
        is transcoded on the fly.
        """
        if fmt not in ("png", "jpeg"):
            raise errors.TileOutOfRange(f"unsupported tile format {fmt!r}")
        pyr = self.pyramid(image_id)
        if not 0 <= frame < pyr.frame_count:
            raise errors.TileOutOfRange(f"frame {frame} outside 0..{pyr.frame_count - 1}")
        if not 0 <= level <= pyr.max_level:
            raise errors.TileOutOfRange(f"level {level} outside 0..{pyr.max_level}")
        level_w, level_h = level_dimensions(pyr.width, pyr.height, level)
        cols, rows = grid_shape(level_w, level_h)
        if not (0 <= col < cols and 0 <= row < rows):
            raise errors.TileOutOfRange(f"tile ({col},{row}) outside {cols}x{rows} grid")
        data = self.tile_path(image_id, frame, level, col, row).read_bytes()
        if fmt == "png":
            return data, "image/png"
        with Image.open(io.BytesIO(data)) as img:
            buf = io.BytesIO()
            img.convert("RGB").save(buf, format="JPEG", quality=85)
        return buf.getvalue(), "image/jpeg"

    def read_region(self, image_id: int, frame: int, level: int, x: int, y: int, w: int, h: int) -> np.ndarray:
        """Pixel region of a level, stitched from the covering tiles."""
        pyr = self.pyramid(image_id)
        level_w, level_h = level_dimensions(pyr.width, pyr.height, level)
        if not (0 <= x and 0 <= y and x + w <= level_w and y + h <= level_h and w > 0 and h > 0):
            raise errors.TileOutOfRange(f"region {x},{y},{w}x{h} outside level {level_w}x{level_h}")
        out = np.zeros((h, w, 3), dtype=np.uint8)
        for row in range(y // TILE_SIZE, (y + h - 1) // TILE_SIZE + 1):
            for col in range(x // TILE_SIZE, (x + w - 1) // TILE_SIZE + 1):
                data, _ = self.get_tile(image_id, frame, level, col, row)
                with Image.open(io.BytesIO(data)) as img:
                    tile = np.asarray(img.convert("RGB"))
                tx, ty = col * TILE_SIZE, row * TILE_SIZE
                sx, sy = max(x - tx, 0), max(y - ty, 0)
                ex = min(x + w - tx, tile.shape[1])
                ey = min(y + h - ty, tile.shape[0])
                out[ty + sy - y : ty + ey - y, tx + sx - x : tx + ex - x] = tile[sy:ey, sx:ex]
        return out
