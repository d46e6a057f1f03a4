"""Patch grid over an image: equal-sized patches, >= 15% overlap.

Origins advance by ``stride = floor(patch * (1 - overlap))`` and the last
origin on each axis is clamped to ``image - patch`` so the final patch
ends exactly at the image edge.  Clamping can only increase overlap, so
adjacent patches always share at least 15% of the patch extent and the
union covers every pixel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from slidehub import errors


def _axis_origins(image: int, patch: int, overlap: float) -> list:
    stride = max(1, math.floor(patch * (1.0 - overlap)))
    origins = []
    k = 0
    while True:
        pos = k * stride
        if pos + patch >= image:
            origins.append(image - patch)
            return origins
        origins.append(pos)
        k += 1


@dataclass(frozen=True)
class GridSpec:
    image_w: int
    image_h: int
    patch_w: int
    patch_h: int
    xs: tuple  # column origins
    ys: tuple  # row origins

    @property
    def cols(self) -> int:
        return len(self.xs)

    @property
    def rows(self) -> int:
        return len(self.ys)

    def origin(self, col: int, row: int) -> tuple:
        if not (0 <= col < self.cols and 0 <= row < self.rows):
            raise errors.CellOutOfRange(f"cell ({col},{row}) outside {self.cols}x{self.rows}")
        return self.xs[col], self.ys[row]

    def patch_rect(self, col: int, row: int) -> tuple:
        x, y = self.origin(col, row)
        return x, y, x + self.patch_w, y + self.patch_h

    def origins(self) -> list:
        """Row-major list of ((col, row), (x, y))."""
        return [((c, r), (x, y)) for r, y in enumerate(self.ys) for c, x in enumerate(self.xs)]


def compute_grid(image_w: int, image_h: int, patch_w: int, patch_h: int,
                 overlap: float = 0.15) -> GridSpec:
    if patch_w < 1 or patch_h < 1:
        raise errors.BadFilter("patch dimensions must be >= 1")
    if patch_w > image_w or patch_h > image_h:
        raise errors.PatchLargerThanImage(
            f"patch {patch_w}x{patch_h} exceeds image {image_w}x{image_h}"
        )
    return GridSpec(
        image_w, image_h, patch_w, patch_h,
        xs=tuple(_axis_origins(image_w, patch_w, overlap)),
        ys=tuple(_axis_origins(image_h, patch_h, overlap)),
    )
