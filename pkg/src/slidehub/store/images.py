"""Image sets and image ingest.

Uploads are decoded, pseudonymized, pyramid-tiled, and the original bytes
parked server-side (never served to scoped-token callers).  Virtual sets
may also hold shadow records for remote images whose pixels stay on the
owning instance.
"""

from __future__ import annotations

from datetime import datetime, timezone
from pathlib import Path

from slidehub import errors
from slidehub.access import AccessService
from slidehub.core.naming import pseudonymize_name
from slidehub.core.records import ImageRecord, ImageSet
from slidehub.store.db import Database, utcnow
from slidehub.tiles import TileEngine, decode_image_bytes

# Plain rasters only; WSI vendor containers are rejected up front even
# when they are TIFF underneath.
SUPPORTED_EXTENSIONS = {".png", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff"}
VENDOR_EXTENSIONS = {
    ".svs", ".vms", ".vmu", ".ndpi", ".scn", ".mrxs", ".svslide", ".bif", ".czi", ".isyntax", ".dcm",
}


def is_supported_filename(name: str) -> bool:
    return Path(name).suffix.lower() in SUPPORTED_EXTENSIONS


def _row_image(row) -> ImageRecord:
    return ImageRecord(
        id=row["id"],
        private_name=row["private_name"],
        public_name=row["public_name"],
        width=row["width"],
        height=row["height"],
        frame_count=row["frame_count"],
        image_set_id=row["image_set_id"],
        owner_instance=row["owner_instance"],
    )


class ImageStore:
    def __init__(self, db: Database, access: AccessService, engine: TileEngine, storage_root):
        self.db = db
        self.access = access
        self.engine = engine
        self.root = Path(storage_root)

    # --- image sets ---

    def create_image_set(self, user, name: str, team_id: int, description: str = "",
                         is_virtual: bool = False) -> ImageSet:
        self.access.require(user, "create", team_id)
        with self.db.tx() as conn:
            set_id = conn.execute(
                "INSERT INTO image_sets (name, team_id, description, is_virtual) VALUES (?, ?, ?, ?)",
                (name, team_id, description, int(is_virtual)),
            ).lastrowid
        return self.get_image_set(set_id)

    def get_image_set(self, set_id: int) -> ImageSet:
        row = self.db.one("SELECT * FROM image_sets WHERE id = ?", (set_id,))
        if row is None:
            raise errors.NotFound(f"image set {set_id}")
        products = [r["product_id"] for r in self.db.query(
            "SELECT product_id FROM set_products WHERE image_set_id = ? ORDER BY product_id", (set_id,)
        )]
        image_ids = [r["id"] for r in self.db.query(
            "SELECT id FROM images WHERE image_set_id = ? ORDER BY id", (set_id,)
        )]
        return ImageSet(
            id=row["id"],
            name=row["name"],
            team_id=row["team_id"],
            description=row["description"],
            product_ids=products,
            image_ids=image_ids,
            is_virtual=bool(row["is_virtual"]),
        )

    # --- ingest ---

    def upload_image(self, user, image_set_id: int, filename: str, data: bytes,
                     upload_time: datetime | None = None) -> ImageRecord:
        """Decode, pseudonymize, and tile an uploaded raster."""
        self.access.require_set(user, "create", image_set_id)
        if not is_supported_filename(filename):
            raise errors.DecodeError(f"unsupported format: {Path(filename).suffix or filename}")
        frames = decode_image_bytes(data)
        when = upload_time or datetime.now(timezone.utc)
        public_name = pseudonymize_name(Path(filename).name, when)
        height, width = frames[0].shape[:2]
        with self.db.tx() as conn:
            image_id = conn.execute(
                "INSERT INTO images (private_name, public_name, width, height, frame_count,"
                " image_set_id, created_at) VALUES (?, ?, ?, ?, ?, ?, ?)",
                (Path(filename).name, public_name, width, height, len(frames), image_set_id, utcnow()),
            ).lastrowid
        try:
            self.engine.ingest_frames(frames, image_id)
            original = self.root / "originals" / str(image_id)
            original.mkdir(parents=True, exist_ok=True)
            (original / "upload.bin").write_bytes(data)
        except Exception:
            with self.db.tx() as conn:
                conn.execute("DELETE FROM images WHERE id = ?", (image_id,))
            raise
        return self.get_image(image_id)

    def register_map_image(self, pixels, label: str, image_set_id: int) -> ImageRecord:
        """Register a synthetic (layout map) raster as an ordinary image.

        The label is treated like any uploaded filename: kept internal
        and pseudonymized for the public name.
        """
        height, width = pixels.shape[:2]
        public_name = pseudonymize_name(label, datetime.now(timezone.utc))
        with self.db.tx() as conn:
            image_id = conn.execute(
                "INSERT INTO images (private_name, public_name, width, height, frame_count,"
                " image_set_id, created_at) VALUES (?, ?, ?, ?, ?, ?, ?)",
                (label, public_name, width, height, 1, image_set_id, utcnow()),
            ).lastrowid
        self.engine.build_pyramid(pixels, image_id)
        return self.get_image(image_id)

    def register_remote_image(self, image_set_id: int, base_url: str, public_name: str,
                              width: int, height: int, scoped_token: str | None) -> ImageRecord:
        """Shadow record for a remote image; pixels stay with the owner."""
        existing = self.db.one(
            "SELECT id FROM images WHERE image_set_id = ? AND owner_instance = ? AND public_name = ?",
            (image_set_id, base_url, public_name),
        )
        if existing:
            if scoped_token is not None:
                with self.db.tx() as conn:
                    conn.execute("UPDATE images SET remote_token = ? WHERE id = ?",
                                 (scoped_token, existing["id"]))
            return self.get_image(existing["id"])
        with self.db.tx() as conn:
            image_id = conn.execute(
                "INSERT INTO images (private_name, public_name, width, height, frame_count,"
                " image_set_id, owner_instance, remote_token, created_at)"
                " VALUES ('', ?, ?, ?, 1, ?, ?, ?, ?)",
                (public_name, width, height, image_set_id, base_url, scoped_token, utcnow()),
            ).lastrowid
        return self.get_image(image_id)

    # --- reads ---

    def get_image(self, image_id: int) -> ImageRecord:
        row = self.db.one("SELECT * FROM images WHERE id = ?", (image_id,))
        if row is None:
            raise errors.ImageNotFound(f"image {image_id}")
        return _row_image(row)

    def remote_token(self, image_id: int):
        row = self.db.one("SELECT remote_token FROM images WHERE id = ?", (image_id,))
        return row["remote_token"] if row else None

    def images_in_set(self, image_set_id: int) -> list:
        rows = self.db.query("SELECT * FROM images WHERE image_set_id = ? ORDER BY id", (image_set_id,))
        return [_row_image(r) for r in rows]

    def original_path(self, image_id: int) -> Path:
        path = self.root / "originals" / str(image_id) / "upload.bin"
        if not path.exists():
            raise errors.NotFound(f"no original stored for image {image_id}")
        return path

    # --- destructive ---

    def delete_image(self, user, image_id: int) -> None:
        """Hard-delete an image and everything hanging off it.

        Annotations on the image are lost, including their entries inside
        existing version snapshots (images are too large to version, so a
        snapshot cannot resurrect them).  Documented destructive cascade.
        """
        image = self.get_image(image_id)
        self.access.require_image(user, "delete", image_id)
        import json

        with self.db.tx() as conn:
            ann_ids = [r["id"] for r in conn.execute(
                "SELECT id FROM annotations WHERE image_id = ?", (image_id,)
            ).fetchall()]
            if ann_ids:
                marks = ",".join("?" * len(ann_ids))
                conn.execute(f"DELETE FROM verifications WHERE annotation_id IN ({marks})", ann_ids)
                conn.execute(f"DELETE FROM media WHERE annotation_id IN ({marks})", ann_ids)
                conn.execute(f"DELETE FROM annotations WHERE id IN ({marks})", ann_ids)
            conn.execute("DELETE FROM image_marks WHERE image_id = ?", (image_id,))
            conn.execute("DELETE FROM screening_maps WHERE image_id = ?", (image_id,))
            conn.execute("DELETE FROM share_grants WHERE image_id = ?", (image_id,))
            for row in conn.execute(
                "SELECT id, image_list, snapshot FROM versions WHERE image_set_id = ?",
                (image.image_set_id,),
            ).fetchall():
                image_list = [i for i in json.loads(row["image_list"]) if i != image_id]
                snapshot = [e for e in json.loads(row["snapshot"]) if e["image_id"] != image_id]
                conn.execute(
                    "UPDATE versions SET image_list = ?, snapshot = ? WHERE id = ?",
                    (json.dumps(image_list), json.dumps(snapshot), row["id"]),
                )
            conn.execute("DELETE FROM images WHERE id = ?", (image_id,))
        self.engine.remove(image_id)
