"""Layout maps: per-class grids, score-ordered density maps, cluster maps.

Each builder crops the source annotations out of their tile pyramids,
arranges the crops on a synthetic canvas, registers the canvas as an
ordinary image (viewable, screenable, annotatable), and records a
registry mapping every occupied cell back to its source annotation so
corrections made on the map can be pushed to the original data.

Registries are persisted in the database and mirrored to a JSON sidecar
``{storage_root}/{map_image_id}.registry.json`` for external tooling.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
from PIL import Image

from slidehub import errors
from slidehub.access import AccessService
from slidehub.core.vectors import vector_bbox
from slidehub.store.annotations import AnnotationStore
from slidehub.store.catalog import Catalog
from slidehub.store.db import Database
from slidehub.store.images import ImageStore
from slidehub.tiles import TileEngine, level_dimensions

MAP_KINDS = ("class_grid", "density", "cluster")

# outward spiral directions, in tie-break order
_SPIRAL_STEPS = ((1, 0), (0, 1), (-1, 0), (0, -1))  # right, down, left, up


@dataclass(frozen=True)
class RegistryEntry:
    cell: tuple  # (x1, y1, x2, y2) on the map image
    col: int
    row: int
    source_image_id: int
    source_annotation_id: int


@dataclass
class MapRegistry:
    map_image_id: int
    map_kind: str
    cell_size: int
    entries: list

    def entry_at(self, col: int, row: int):
        for entry in self.entries:
            if (entry.col, entry.row) == (col, row):
                return entry
        return None

    def to_json(self) -> str:
        return json.dumps(
            {
                "map_image_id": self.map_image_id,
                "map_kind": self.map_kind,
                "cell_size": self.cell_size,
                "entries": [asdict(e) for e in self.entries],
            },
            indent=2,
        )


def grid_columns(n: int) -> tuple:
    """(cols, rows) of a near-square row-major grid for n cells."""
    cols = math.ceil(math.sqrt(n))
    return cols, math.ceil(n / cols)


def density_bin(score: float, bin_width: float) -> int:
    """Column bin of a score; scores outside [0, 4] are rejected."""
    if not 0.0 <= score <= 4.0:
        raise errors.ScoreOutOfRange(f"score {score} outside [0, 4]")
    if bin_width <= 0:
        raise errors.BadFilter("bin_width must be positive")
    return math.floor(score / bin_width)


def cluster_cells(points: list, grid_cols: int, grid_rows: int) -> list:
    """Quantize 2D embedding points to cells, spiraling around collisions.

    Points are min-max normalized per axis onto the cell grid.  When the
    quantized cell is taken, an outward square spiral (right, down, left,
    up) finds the nearest free cell; the spiral order is the fixed
    tie-break among equally-near (Chebyshev) candidates, which makes
    placements fully deterministic.
    """
    if grid_cols * grid_rows < len(points):
        raise errors.CanvasTooSmall(
            f"{len(points)} patches exceed {grid_cols}x{grid_rows} canvas cells"
        )
    us = [p[0] for p in points]
    vs = [p[1] for p in points]
    u_min, u_max = min(us), max(us)
    v_min, v_max = min(vs), max(vs)

    def quantize(value, lo, hi, n):
        if hi <= lo:
            return 0
        return int(math.floor((value - lo) / (hi - lo) * (n - 1) + 0.5)) if n > 1 else 0

    taken = set()
    placed = []
    for u, v in points:
        col = quantize(u, u_min, u_max, grid_cols)
        row = quantize(v, v_min, v_max, grid_rows)
        cell = _nearest_free_cell(col, row, grid_cols, grid_rows, taken)
        taken.add(cell)
        placed.append(cell)
    return placed


def _nearest_free_cell(col: int, row: int, cols: int, rows: int, taken: set) -> tuple:
    if (col, row) not in taken:
        return (col, row)
    right, down, left, up = _SPIRAL_STEPS
    for radius in range(1, cols + rows + 1):
        # walk the full Chebyshev ring clockwise, starting one step right:
        # 8r cells via segments down r, left 2r, up 2r, right 2r, down r
        c, r = col + radius, row
        segments = ((down, radius), (left, 2 * radius), (up, 2 * radius),
                    (right, 2 * radius), (down, radius))
        for (dc, dr), steps in segments:
            for _ in range(steps):
                if 0 <= c < cols and 0 <= r < rows and (c, r) not in taken:
                    return (c, r)
                c, r = c + dc, r + dr
    raise errors.CanvasTooSmall("no free cell left")


class LayoutMapService:
    def __init__(self, db: Database, access: AccessService, images: ImageStore,
                 annotations: AnnotationStore, catalog: Catalog, engine: TileEngine, storage_root):
        self.db = db
        self.access = access
        self.images = images
        self.annotations = annotations
        self.catalog = catalog
        self.engine = engine
        self.root = Path(storage_root)

    # --- crop extraction ---

    def _crop(self, annotation, cell: int) -> np.ndarray:
        """Annotation bounding-box pixels, letterboxed into a square cell."""
        image = self.images.get_image(annotation.image_id)
        template = self.catalog.get_template(annotation.template_id)
        bbox = vector_bbox(template.vector_kind, annotation.vector)
        if bbox is None:
            raise errors.SourceUnavailable(
                f"annotation {annotation.id} has no geometry to crop"
            )
        if image.owner_instance is not None:
            raise errors.SourceUnavailable(f"image {image.id} is remote; pixels stay with the owner")
        x1, y1, x2, y2 = bbox
        x1, y1 = int(math.floor(x1)), int(math.floor(y1))
        x2, y2 = min(int(math.ceil(x2)), image.width), min(int(math.ceil(y2)), image.height)
        bw, bh = max(x2 - x1, 1), max(y2 - y1, 1)

        pyr = self.engine.pyramid(image.id)
        shrink = max(bw / cell, bh / cell)
        k = max(0, math.ceil(math.log2(shrink))) if shrink > 1 else 0
        k = min(k, pyr.max_level)
        level = pyr.max_level - k
        lw, lh = level_dimensions(image.width, image.height, level)
        rx, ry = x1 >> k, y1 >> k
        rw = max(1, min((bw + (1 << k) - 1) >> k, lw - rx))
        rh = max(1, min((bh + (1 << k) - 1) >> k, lh - ry))
        region = self.engine.read_region(image.id, 0, level, rx, ry, rw, rh)

        scale = min(cell / region.shape[1], cell / region.shape[0], 1.0)
        out_w = max(1, int(round(region.shape[1] * scale)))
        out_h = max(1, int(round(region.shape[0] * scale)))
        resized = np.asarray(
            Image.fromarray(region).resize((out_w, out_h), Image.Resampling.BILINEAR)
        )
        tile = np.full((cell, cell, 3), 255, dtype=np.uint8)
        ox, oy = (cell - out_w) // 2, (cell - out_h) // 2
        tile[oy : oy + out_h, ox : ox + out_w] = resized
        return tile

    def _publish(self, user, canvas: np.ndarray, kind: str, image_set_id: int,
                 entries: list, cell_size: int, label: str):
        self.access.require_set(user, "create", image_set_id)
        record = self.images.register_map_image(canvas, label, image_set_id)
        registry = MapRegistry(record.id, kind, cell_size, entries)
        with self.db.tx() as conn:
            conn.execute(
                "INSERT OR REPLACE INTO map_registries (map_image_id, map_kind, entries)"
                " VALUES (?, ?, ?)",
                (record.id, kind, registry.to_json()),
            )
        (self.root / f"{record.id}.registry.json").write_text(registry.to_json())
        return record, registry

    # --- builders ---

    def build_class_grid(self, user, image_set_id: int, template_id: int, cell_size: int = 64,
                         target_set_id: int | None = None):
        """All crops of one label in a near-square row-major matrix."""
        self.access.require_set(user, "read", image_set_id)
        records, _ = self.annotations.query_annotations(
            user, {"image_set_id": image_set_id, "template_id": template_id}, limit=1_000_000
        )
        if not records:
            raise errors.EmptyClass(f"no annotations with template {template_id} in set {image_set_id}")
        cols, rows = grid_columns(len(records))
        canvas = np.full((rows * cell_size, cols * cell_size, 3), 255, dtype=np.uint8)
        entries = []
        for index, record in enumerate(records):
            col, row = index % cols, index // cols
            x, y = col * cell_size, row * cell_size
            canvas[y : y + cell_size, x : x + cell_size] = self._crop(record, cell_size)
            entries.append(RegistryEntry(
                cell=(x, y, x + cell_size, y + cell_size),
                col=col, row=row,
                source_image_id=record.image_id,
                source_annotation_id=record.id,
            ))
        template = self.catalog.get_template(template_id)
        label = f"class-map-{template.name}-{datetime.now(timezone.utc):%y%m%d%H%M%S%f}"
        return self._publish(user, canvas, "class_grid", target_set_id or image_set_id,
                             entries, cell_size, label)

    def build_density_map(self, user, image_set_id: int, bin_width: float = 0.05,
                          cell_size: int = 64, score_key: str = "score",
                          template_id: int | None = None, target_set_id: int | None = None):
        """Crops ordered by score along x, equal-score bins stacked along y.

        Scores come from annotation meta (``score_key``); annotations
        without a numeric score are skipped.  Column = floor(score /
        bin_width); within a column, crops stack bottom-up in ascending
        score order (ties by annotation id).
        """
        self.access.require_set(user, "read", image_set_id)
        filters = {"image_set_id": image_set_id}
        if template_id is not None:
            filters["template_id"] = template_id
        records, _ = self.annotations.query_annotations(user, filters, limit=1_000_000)
        scored = [
            (float(r.meta[score_key]), r)
            for r in records
            if isinstance(r.meta.get(score_key), (int, float))
            and not isinstance(r.meta.get(score_key), bool)
        ]
        if not scored:
            raise errors.EmptyClass(f"no annotations carry a {score_key!r} value")
        binned = [(density_bin(score, bin_width), score, r) for score, r in scored]

        columns: dict = {}
        for bin_index, score, record in sorted(binned, key=lambda t: (t[1], t[2].id)):
            columns.setdefault(bin_index, []).append(record)
        width = (max(columns) + 1) * cell_size
        height = max(len(stack) for stack in columns.values()) * cell_size
        canvas = np.full((height, width, 3), 255, dtype=np.uint8)
        entries = []
        for bin_index, stack in columns.items():
            x = bin_index * cell_size
            for position, record in enumerate(stack):
                y = height - (position + 1) * cell_size  # stack upward from the bottom
                canvas[y : y + cell_size, x : x + cell_size] = self._crop(record, cell_size)
                entries.append(RegistryEntry(
                    cell=(x, y, x + cell_size, y + cell_size),
                    col=bin_index, row=y // cell_size,
                    source_image_id=record.image_id,
                    source_annotation_id=record.id,
                ))
        label = f"density-map-{datetime.now(timezone.utc):%y%m%d%H%M%S%f}"
        return self._publish(user, canvas, "density", target_set_id or image_set_id,
                             entries, cell_size, label)

    def build_cluster_map(self, user, patches: list, canvas_w: int, canvas_h: int,
                          cell_size: int, image_set_id: int):
        """Place crops at their 2D embedding cells without overlap.

        ``patches`` is a list of (annotation_id, u, v); the embedding is
        supplied by the caller (feature extraction and dimensionality
        reduction happen outside the server).
        """
        if not patches:
            raise errors.EmptyClass("no patches to place")
        grid_cols, grid_rows = canvas_w // cell_size, canvas_h // cell_size
        if grid_cols < 1 or grid_rows < 1:
            raise errors.CanvasTooSmall("canvas smaller than one cell")
        records = [self.annotations.get_annotation(int(aid)) for aid, _, _ in patches]
        for record in records:
            self.access.require_image(user, "read", record.image_id)
        cells = cluster_cells([(u, v) for _, u, v in patches], grid_cols, grid_rows)
        canvas = np.full((canvas_h, canvas_w, 3), 255, dtype=np.uint8)
        entries = []
        for record, (col, row) in zip(records, cells):
            x, y = col * cell_size, row * cell_size
            canvas[y : y + cell_size, x : x + cell_size] = self._crop(record, cell_size)
            entries.append(RegistryEntry(
                cell=(x, y, x + cell_size, y + cell_size),
                col=col, row=row,
                source_image_id=record.image_id,
                source_annotation_id=record.id,
            ))
        label = f"cluster-map-{datetime.now(timezone.utc):%y%m%d%H%M%S%f}"
        return self._publish(user, canvas, "cluster", image_set_id, entries, cell_size, label)

    # --- registry & correction sync ---

    def registry_for(self, map_image_id: int) -> MapRegistry:
        row = self.db.one("SELECT * FROM map_registries WHERE map_image_id = ?", (map_image_id,))
        if row is None:
            raise errors.NotFound(f"no registry for image {map_image_id}")
        payload = json.loads(row["entries"])
        return MapRegistry(
            map_image_id=payload["map_image_id"],
            map_kind=payload["map_kind"],
            cell_size=payload["cell_size"],
            entries=[RegistryEntry(
                cell=tuple(e["cell"]), col=e["col"], row=e["row"],
                source_image_id=e["source_image_id"],
                source_annotation_id=e["source_annotation_id"],
            ) for e in payload["entries"]],
        )

    def sync_correction(self, user, map_image_id: int, col: int, row: int,
                        new_template: int | None = None, delete: bool = False,
                        verify: str | None = None):
        """Apply a map-cell edit to the registered source annotation."""
        registry = self.registry_for(map_image_id)
        entry = registry.entry_at(col, row)
        if entry is None:
            raise errors.EmptyCell(f"cell ({col},{row}) maps to no annotation")
        annotation_id = entry.source_annotation_id
        if delete:
            return self.annotations.delete_annotation(user, annotation_id)
        if new_template is not None:
            return self.annotations.update_annotation(user, annotation_id, new_template=new_template)
        if verify is not None:
            self.annotations.verify_annotation(user, annotation_id, verify)
            return self.annotations.get_annotation(annotation_id)
        raise errors.BadFilter("correction needs new_template, delete, or verify")

    # --- field-of-view score ---

    def field_of_view_score(self, user, image_id: int, window: tuple,
                            grade_key: str = "grade") -> float:
        """Mean annotation grade over a viewport, scaled to [0, 400].

        Counts annotations intersecting the window whose meta carries an
        integer grade 0..4 under ``grade_key``.
        """
        self.access.require_image(user, "read", image_id)
        records, _ = self.annotations.query_annotations(
            user, {"image_id": image_id, "window": window}, limit=1_000_000
        )
        grades = []
        for record in records:
            grade = record.meta.get(grade_key)
            if isinstance(grade, bool) or not isinstance(grade, (int, float)):
                continue
            if float(grade).is_integer() and 0 <= grade <= 4:
                grades.append(int(grade))
        if not grades:
            raise errors.NoCellsInView("no graded annotations intersect the view")
        return 100.0 * sum(grades) / len(grades)
