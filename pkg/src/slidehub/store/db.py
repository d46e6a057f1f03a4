"""SQLite connection, schema, and the write lock.

A single connection guarded by one re-entrant lock serializes writes
(last-editor-wins by arrival order) and makes version snapshots trivially
consistent: whoever holds the lock sees no concurrent mutation.  Reads at
desk scale are cheap enough to share the same lock.

Annotation vectors are stored as canonical JSON (queryable in SQL via
json_extract) with the derived bounding box denormalized into indexed
columns for coordinate-window filters.
"""

from __future__ import annotations

import sqlite3
import threading
from contextlib import contextmanager
from datetime import datetime, timezone
from pathlib import Path

_SCHEMA = """
CREATE TABLE IF NOT EXISTS users (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    username TEXT UNIQUE NOT NULL,
    token TEXT UNIQUE NOT NULL,
    active INTEGER NOT NULL DEFAULT 1,
    anonymized INTEGER NOT NULL DEFAULT 0,
    is_admin INTEGER NOT NULL DEFAULT 0
);
CREATE TABLE IF NOT EXISTS teams (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    name TEXT UNIQUE NOT NULL
);
CREATE TABLE IF NOT EXISTS memberships (
    user_id INTEGER NOT NULL REFERENCES users(id),
    team_id INTEGER NOT NULL REFERENCES teams(id),
    rights TEXT NOT NULL,
    PRIMARY KEY (user_id, team_id)
);
CREATE TABLE IF NOT EXISTS image_sets (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    name TEXT NOT NULL,
    team_id INTEGER NOT NULL REFERENCES teams(id),
    description TEXT NOT NULL DEFAULT '',
    mode TEXT NOT NULL DEFAULT 'cooperative',
    required_verifications INTEGER NOT NULL DEFAULT 1,
    is_virtual INTEGER NOT NULL DEFAULT 0
);
CREATE TABLE IF NOT EXISTS products (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    name TEXT NOT NULL,
    description TEXT NOT NULL DEFAULT ''
);
CREATE TABLE IF NOT EXISTS templates (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    name TEXT NOT NULL,
    vector_kind TEXT NOT NULL,
    color TEXT NOT NULL DEFAULT '#ff0000',
    shortcut TEXT,
    sort_order INTEGER NOT NULL DEFAULT 0,
    default_width INTEGER,
    default_height INTEGER,
    example_image_ref TEXT
);
CREATE TABLE IF NOT EXISTS product_templates (
    product_id INTEGER NOT NULL REFERENCES products(id),
    template_id INTEGER NOT NULL REFERENCES templates(id),
    position INTEGER NOT NULL,
    PRIMARY KEY (product_id, template_id)
);
CREATE TABLE IF NOT EXISTS set_products (
    image_set_id INTEGER NOT NULL REFERENCES image_sets(id),
    product_id INTEGER NOT NULL REFERENCES products(id),
    PRIMARY KEY (image_set_id, product_id)
);
CREATE TABLE IF NOT EXISTS images (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    private_name TEXT NOT NULL DEFAULT '',
    public_name TEXT NOT NULL,
    width INTEGER NOT NULL,
    height INTEGER NOT NULL,
    frame_count INTEGER NOT NULL DEFAULT 1,
    image_set_id INTEGER NOT NULL REFERENCES image_sets(id),
    owner_instance TEXT,
    remote_token TEXT,
    created_at TEXT NOT NULL
);
CREATE INDEX IF NOT EXISTS idx_images_set ON images(image_set_id);
CREATE TABLE IF NOT EXISTS annotations (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    image_id INTEGER NOT NULL REFERENCES images(id),
    template_id INTEGER NOT NULL REFERENCES templates(id),
    vector TEXT NOT NULL,
    bb_x1 REAL, bb_y1 REAL, bb_x2 REAL, bb_y2 REAL,
    creator_id INTEGER NOT NULL REFERENCES users(id),
    last_editor_id INTEGER NOT NULL REFERENCES users(id),
    created_at TEXT NOT NULL,
    updated_at TEXT NOT NULL,
    meta TEXT NOT NULL DEFAULT '{}',
    deleted INTEGER NOT NULL DEFAULT 0,
    origin_instance TEXT,
    origin_id INTEGER
);
CREATE INDEX IF NOT EXISTS idx_annotations_image ON annotations(image_id);
CREATE INDEX IF NOT EXISTS idx_annotations_bbox ON annotations(bb_x1, bb_y1, bb_x2, bb_y2);
CREATE UNIQUE INDEX IF NOT EXISTS idx_annotations_origin
    ON annotations(origin_instance, origin_id) WHERE origin_instance IS NOT NULL;
CREATE TABLE IF NOT EXISTS verifications (
    annotation_id INTEGER NOT NULL REFERENCES annotations(id),
    user_id INTEGER NOT NULL REFERENCES users(id),
    verdict TEXT NOT NULL,
    timestamp TEXT NOT NULL,
    PRIMARY KEY (annotation_id, user_id)
);
CREATE TABLE IF NOT EXISTS media (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    annotation_id INTEGER NOT NULL REFERENCES annotations(id),
    mime_type TEXT NOT NULL,
    name TEXT NOT NULL,
    bytes_ref TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS versions (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    image_set_id INTEGER NOT NULL REFERENCES image_sets(id),
    name TEXT NOT NULL,
    description TEXT NOT NULL DEFAULT '',
    created_at TEXT NOT NULL,
    image_list TEXT NOT NULL,
    snapshot TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS artifacts (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    version_id INTEGER NOT NULL REFERENCES versions(id),
    name TEXT NOT NULL,
    mime_type TEXT NOT NULL,
    bytes_ref TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS image_marks (
    image_id INTEGER NOT NULL REFERENCES images(id),
    user_id INTEGER NOT NULL REFERENCES users(id),
    timestamp TEXT NOT NULL,
    PRIMARY KEY (image_id, user_id)
);
CREATE TABLE IF NOT EXISTS screening_maps (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    image_id INTEGER NOT NULL REFERENCES images(id),
    user_id INTEGER NOT NULL REFERENCES users(id),
    patch_w INTEGER NOT NULL,
    patch_h INTEGER NOT NULL,
    cols INTEGER NOT NULL,
    rows INTEGER NOT NULL,
    screened BLOB NOT NULL,
    cur_col INTEGER NOT NULL DEFAULT 0,
    cur_row INTEGER NOT NULL DEFAULT 0,
    created_at TEXT NOT NULL,
    UNIQUE (image_id, user_id)
);
CREATE TABLE IF NOT EXISTS share_grants (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    image_id INTEGER NOT NULL REFERENCES images(id),
    peer TEXT NOT NULL,
    token TEXT UNIQUE NOT NULL,
    revoked INTEGER NOT NULL DEFAULT 0,
    created_at TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS map_registries (
    map_image_id INTEGER PRIMARY KEY REFERENCES images(id),
    map_kind TEXT NOT NULL,
    entries TEXT NOT NULL
);
"""


def utcnow() -> str:
    """ISO-8601 UTC timestamp; the single clock for audit fields."""
    return datetime.now(timezone.utc).isoformat(timespec="microseconds")


class Database:
    """Shared connection with serialized writes."""

    def __init__(self, path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._conn = sqlite3.connect(str(self.path), check_same_thread=False)
        self._conn.row_factory = sqlite3.Row
        self._conn.execute("PRAGMA foreign_keys = ON")
        self.lock = threading.RLock()
        with self.lock:
            self._conn.executescript(_SCHEMA)
            self._conn.commit()

    @contextmanager
    def tx(self):
        """Write transaction; commits on success, rolls back on error."""
        with self.lock:
            try:
                yield self._conn
                self._conn.commit()
            except BaseException:
                self._conn.rollback()
                raise

    def query(self, sql: str, params=()) -> list:
        with self.lock:
            return self._conn.execute(sql, params).fetchall()

    def one(self, sql: str, params=()):
        rows = self.query(sql, params)
        return rows[0] if rows else None

    def close(self) -> None:
        with self.lock:
            self._conn.close()
