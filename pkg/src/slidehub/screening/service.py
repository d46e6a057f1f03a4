"""Screening map persistence: screened flags and the resume position.

One map per (image, user); grids pack their screened flags into a bitset
(row-major, LSB-first within each byte) so maps with thousands of cells
stay one row.
"""

from __future__ import annotations

from slidehub import errors
from slidehub.access import AccessService
from slidehub.core.records import ScreeningMap
from slidehub.screening.grid import GridSpec, compute_grid
from slidehub.store.db import Database, utcnow
from slidehub.store.images import ImageStore


def bit_get(bits: bytes, index: int) -> bool:
    return bool(bits[index // 8] & (1 << (index % 8)))


def bit_set(bits: bytearray, index: int) -> None:
    bits[index // 8] |= 1 << (index % 8)


def bit_count(bits: bytes) -> int:
    return sum(bin(b).count("1") for b in bits)


class ScreeningService:
    def __init__(self, db: Database, access: AccessService, images: ImageStore):
        self.db = db
        self.access = access
        self.images = images

    def _row_map(self, row) -> ScreeningMap:
        return ScreeningMap(
            id=row["id"],
            image_id=row["image_id"],
            user_id=row["user_id"],
            patch_w=row["patch_w"],
            patch_h=row["patch_h"],
            cols=row["cols"],
            rows=row["rows"],
            screened=bytes(row["screened"]),
            current=(row["cur_col"], row["cur_row"]),
            created_at=row["created_at"],
        )

    def register_map(self, user, image_id: int, patch_w: int, patch_h: int) -> ScreeningMap:
        """Create (or fetch) the user's map for an image.

        The patch size comes from the client's viewport at its chosen
        zoom.  Re-registering with a different patch size starts a fresh
        map; with the same size it resumes the existing one.
        """
        self.access.require_image(user, "read", image_id)
        image = self.images.get_image(image_id)
        grid = compute_grid(image.width, image.height, patch_w, patch_h)
        existing = self.db.one(
            "SELECT * FROM screening_maps WHERE image_id = ? AND user_id = ?", (image_id, user.id)
        )
        if existing is not None:
            if (existing["patch_w"], existing["patch_h"]) == (patch_w, patch_h):
                return self._row_map(existing)
            with self.db.tx() as conn:
                conn.execute("DELETE FROM screening_maps WHERE id = ?", (existing["id"],))
        bits = bytes((grid.cols * grid.rows + 7) // 8)
        with self.db.tx() as conn:
            map_id = conn.execute(
                "INSERT INTO screening_maps (image_id, user_id, patch_w, patch_h, cols, rows,"
                " screened, created_at) VALUES (?, ?, ?, ?, ?, ?, ?, ?)",
                (image_id, user.id, patch_w, patch_h, grid.cols, grid.rows, bits, utcnow()),
            ).lastrowid
        return self.get_map(user, map_id)

    def get_map(self, user, map_id: int) -> ScreeningMap:
        row = self.db.one("SELECT * FROM screening_maps WHERE id = ?", (map_id,))
        if row is None:
            raise errors.NotFound(f"screening map {map_id}")
        if row["user_id"] != user.id:
            raise errors.PermissionDenied("screening maps are per-user")
        return self._row_map(row)

    def map_for_image(self, user, image_id: int):
        row = self.db.one(
            "SELECT * FROM screening_maps WHERE image_id = ? AND user_id = ?", (image_id, user.id)
        )
        return self._row_map(row) if row else None

    def grid_for(self, smap: ScreeningMap) -> GridSpec:
        image = self.images.get_image(smap.image_id)
        return compute_grid(image.width, image.height, smap.patch_w, smap.patch_h)

    @staticmethod
    def progress(smap: ScreeningMap) -> float:
        total = smap.cols * smap.rows
        return bit_count(smap.screened) / total if total else 0.0

    def _check_cell(self, smap: ScreeningMap, col: int, row: int) -> int:
        if not (0 <= col < smap.cols and 0 <= row < smap.rows):
            raise errors.CellOutOfRange(f"cell ({col},{row}) outside {smap.cols}x{smap.rows}")
        return row * smap.cols + col

    def mark_screened(self, user, map_id: int, col: int, row: int):
        """Set a cell's screened flag (idempotent); returns (map, progress)."""
        smap = self.get_map(user, map_id)
        index = self._check_cell(smap, col, row)
        bits = bytearray(smap.screened)
        bit_set(bits, index)
        with self.db.tx() as conn:
            conn.execute("UPDATE screening_maps SET screened = ? WHERE id = ?", (bytes(bits), map_id))
        smap = self.get_map(user, map_id)
        return smap, self.progress(smap)

    def record_position(self, user, map_id: int, col: int, row: int) -> None:
        """Persist the user's field-of-view cell for a later resume."""
        smap = self.get_map(user, map_id)
        self._check_cell(smap, col, row)
        with self.db.tx() as conn:
            conn.execute(
                "UPDATE screening_maps SET cur_col = ?, cur_row = ? WHERE id = ?", (col, row, map_id)
            )

    def resume(self, user, map_id: int) -> dict:
        """Everything a client needs to restore the exact field of view."""
        smap = self.get_map(user, map_id)
        grid = self.grid_for(smap)
        col, row = smap.current
        return {
            "map": smap,
            "current_rect": grid.patch_rect(col, row),
            "grid": grid,
            "progress": self.progress(smap),
        }
