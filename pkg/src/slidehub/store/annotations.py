"""Annotation lifecycle: CRUD, verification, versions, media, export.

Deletes are soft (a flag) so immutable version snapshots keep resolving;
snapshots denormalize everything an export needs (public names, template
names, creator usernames) at creation time, which is what makes version
exports byte-stable under later mutations, renames, or user
anonymization.
"""

from __future__ import annotations

import json
import re
from pathlib import Path

from slidehub import errors
from slidehub.access import AccessService
from slidehub.core.records import AnnotationRecord, MediaAttachment, Verification, Version, VersionArtifact
from slidehub.core.vectors import canonical_coords, validate_vector, vector_bbox, vector_json
from slidehub.store.catalog import Catalog
from slidehub.store.db import Database, utcnow
from slidehub.store.images import ImageStore

EXPORT_PLACEHOLDERS = ("public_name", "template_name", "vector", "creator", "updated_at")
_PLACEHOLDER_RE = re.compile(r"\{([^{}]*)\}")

ANNOTATION_FILTERS = ("image_id", "image_set_id", "template_id", "creator_id", "verified", "window")


class AnnotationStore:
    def __init__(self, db: Database, access: AccessService, images: ImageStore, catalog: Catalog,
                 storage_root):
        self.db = db
        self.access = access
        self.images = images
        self.catalog = catalog
        self.root = Path(storage_root)

    # --- CRUD ---

    def create_annotation(self, user, image_id: int, template_id: int, vector: dict,
                          meta: dict | None = None, origin: tuple | None = None) -> AnnotationRecord:
        image = self.images.get_image(image_id)
        self.access.require_image(user, "create", image_id)
        template = self.catalog.get_template(template_id)
        if not self.catalog.template_usable_on_set(template_id, image.image_set_id):
            raise errors.TemplateNotInProduct(
                f"template {template_id} not attached to set {image.image_set_id}"
            )
        validate_vector(template.vector_kind, vector, image.width, image.height)
        coords = canonical_coords(vector)
        bbox = vector_bbox(template.vector_kind, coords) or (None, None, None, None)
        now = utcnow()
        origin_instance, origin_id = origin or (None, None)
        with self.db.tx() as conn:
            annotation_id = conn.execute(
                "INSERT INTO annotations (image_id, template_id, vector, bb_x1, bb_y1, bb_x2, bb_y2,"
                " creator_id, last_editor_id, created_at, updated_at, meta, origin_instance, origin_id)"
                " VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?)",
                (image_id, template_id, vector_json(coords), *bbox, user.id, user.id, now, now,
                 json.dumps(meta or {}), origin_instance, origin_id),
            ).lastrowid
        return self.get_annotation(annotation_id)

    def get_annotation(self, annotation_id: int) -> AnnotationRecord:
        row = self.db.one("SELECT * FROM annotations WHERE id = ?", (annotation_id,))
        if row is None:
            raise errors.NotFound(f"annotation {annotation_id}")
        return self._record(row)

    def _record(self, row) -> AnnotationRecord:
        return self._records_batch([row])[0]

    def _records_batch(self, rows) -> list:
        """Rows to records with verifications/media batched in two queries."""
        ids = [r["id"] for r in rows]
        verification_map: dict = {}
        media_map: dict = {}
        if ids:
            marks = ",".join("?" * len(ids))
            for v in self.db.query(
                f"SELECT * FROM verifications WHERE annotation_id IN ({marks}) ORDER BY user_id",
                ids,
            ):
                verification_map.setdefault(v["annotation_id"], []).append(
                    Verification(v["user_id"], v["verdict"], v["timestamp"])
                )
            for m in self.db.query(
                f"SELECT id, annotation_id FROM media WHERE annotation_id IN ({marks}) ORDER BY id",
                ids,
            ):
                media_map.setdefault(m["annotation_id"], []).append(m["id"])
        return [
            AnnotationRecord(
                id=row["id"],
                image_id=row["image_id"],
                template_id=row["template_id"],
                vector=json.loads(row["vector"]),
                creator_id=row["creator_id"],
                last_editor_id=row["last_editor_id"],
                created_at=row["created_at"],
                updated_at=row["updated_at"],
                meta=json.loads(row["meta"]),
                deleted=bool(row["deleted"]),
                verifications=verification_map.get(row["id"], []),
                media_ids=media_map.get(row["id"], []),
                origin_instance=row["origin_instance"],
                origin_id=row["origin_id"],
            )
            for row in rows
        ]

    def update_annotation(self, user, annotation_id: int, new_vector: dict | None = None,
                          new_template: int | None = None, new_meta: dict | None = None) -> AnnotationRecord:
        record = self.get_annotation(annotation_id)
        self.access.require_image(user, "update", record.image_id)
        if record.deleted:
            raise errors.Deleted(f"annotation {annotation_id} is deleted")
        image = self.images.get_image(record.image_id)
        template_id = new_template if new_template is not None else record.template_id
        template = self.catalog.get_template(template_id)
        if new_template is not None and not self.catalog.template_usable_on_set(
            template_id, image.image_set_id
        ):
            raise errors.TemplateNotInProduct(
                f"template {template_id} not attached to set {image.image_set_id}"
            )
        coords = canonical_coords(new_vector) if new_vector is not None else record.vector
        validate_vector(template.vector_kind, coords, image.width, image.height)
        bbox = vector_bbox(template.vector_kind, coords) or (None, None, None, None)
        meta = new_meta if new_meta is not None else record.meta
        with self.db.tx() as conn:
            conn.execute(
                "UPDATE annotations SET template_id = ?, vector = ?, bb_x1 = ?, bb_y1 = ?,"
                " bb_x2 = ?, bb_y2 = ?, meta = ?, last_editor_id = ?, updated_at = ? WHERE id = ?",
                (template_id, vector_json(coords), *bbox, json.dumps(meta), user.id, utcnow(),
                 annotation_id),
            )
        return self.get_annotation(annotation_id)

    def delete_annotation(self, user, annotation_id: int) -> AnnotationRecord:
        """Soft delete; idempotent; earlier versions keep the record."""
        record = self.get_annotation(annotation_id)
        self.access.require_image(user, "delete", record.image_id)
        if not record.deleted:
            with self.db.tx() as conn:
                conn.execute(
                    "UPDATE annotations SET deleted = 1, last_editor_id = ?, updated_at = ?"
                    " WHERE id = ?",
                    (user.id, utcnow(), annotation_id),
                )
        return self.get_annotation(annotation_id)

    def verify_annotation(self, user, annotation_id: int, verdict: str) -> list:
        """Record an accept/reject; one verdict per user, latest wins."""
        if verdict not in ("accept", "reject"):
            raise errors.BadFilter(f"verdict must be accept or reject, got {verdict!r}")
        record = self.get_annotation(annotation_id)
        self.access.require_image(user, "verify", record.image_id)
        with self.db.tx() as conn:
            conn.execute(
                "INSERT INTO verifications (annotation_id, user_id, verdict, timestamp)"
                " VALUES (?, ?, ?, ?)"
                " ON CONFLICT (annotation_id, user_id) DO UPDATE SET"
                " verdict = excluded.verdict, timestamp = excluded.timestamp",
                (annotation_id, user.id, verdict, utcnow()),
            )
        return self.get_annotation(annotation_id).verifications

    def upsert_imported(self, user, image_id: int, template_id: int, vector: dict,
                        meta: dict, deleted: bool, origin: tuple) -> AnnotationRecord:
        """Create-or-update an annotation copied from a peer instance.

        Keyed by (origin instance, origin id) so re-imports stay
        idempotent; unlike update_annotation this may flip the deleted
        flag in both directions to mirror the peer.
        """
        origin_instance, origin_id = origin
        row = self.db.one(
            "SELECT id FROM annotations WHERE origin_instance = ? AND origin_id = ?",
            (origin_instance, origin_id),
        )
        if row is None:
            record = self.create_annotation(user, image_id, template_id, vector, meta,
                                            origin=origin)
            if deleted:
                record = self.delete_annotation(user, record.id)
            return record
        image = self.images.get_image(image_id)
        self.access.require_image(user, "update", image_id)
        template = self.catalog.get_template(template_id)
        coords = canonical_coords(vector)
        validate_vector(template.vector_kind, coords, image.width, image.height)
        bbox = vector_bbox(template.vector_kind, coords) or (None, None, None, None)
        with self.db.tx() as conn:
            conn.execute(
                "UPDATE annotations SET template_id = ?, vector = ?, bb_x1 = ?, bb_y1 = ?,"
                " bb_x2 = ?, bb_y2 = ?, meta = ?, deleted = ?, last_editor_id = ?, updated_at = ?"
                " WHERE id = ?",
                (template_id, vector_json(coords), *bbox, json.dumps(meta), int(deleted),
                 user.id, utcnow(), row["id"]),
            )
        return self.get_annotation(row["id"])

    # --- media attachments ---

    def add_media(self, user, annotation_id: int, name: str, mime_type: str, data: bytes) -> MediaAttachment:
        record = self.get_annotation(annotation_id)
        self.access.require_image(user, "update", record.image_id)
        safe = Path(name).name or "attachment"
        with self.db.tx() as conn:
            media_id = conn.execute(
                "INSERT INTO media (annotation_id, mime_type, name, bytes_ref) VALUES (?, ?, ?, '')",
                (annotation_id, mime_type, safe),
            ).lastrowid
            rel = f"media/{media_id}_{safe}"
            conn.execute("UPDATE media SET bytes_ref = ? WHERE id = ?", (rel, media_id))
        path = self.root / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(data)
        return self.get_media(media_id)

    def get_media(self, media_id: int) -> MediaAttachment:
        row = self.db.one("SELECT * FROM media WHERE id = ?", (media_id,))
        if row is None:
            raise errors.NotFound(f"media {media_id}")
        return MediaAttachment(row["id"], row["annotation_id"], row["mime_type"], row["name"],
                               row["bytes_ref"])

    def media_path(self, media_id: int) -> Path:
        return self.root / self.get_media(media_id).bytes_ref

    # --- queries ---

    def query_annotations(self, user, filters: dict | None = None, limit: int = 50,
                          offset: int = 0, include_deleted: bool = False):
        """Page of annotations the user may see, id-ordered, plus total.

        Blind-mode sets restrict to the requester's own rows; the total
        counts only visible rows.  Coordinate windows match by bounding
        box intersection; image-level (global) annotations intersect any
        window of their image.  An explicit image/set filter names a
        scope, so lacking read rights there raises PermissionDenied;
        unscoped queries silently span the readable sets.
        """
        if limit < 1:
            raise errors.BadFilter("limit must be >= 1")
        filters = dict(filters or {})
        unknown = set(filters) - set(ANNOTATION_FILTERS)
        if unknown:
            raise errors.BadFilter(f"unknown filters: {sorted(unknown)}")

        where = []
        params: list = []
        # explicit image/set scope: one rights check up front, no join needed
        scoped_set = None
        if "image_id" in filters:
            image = self.images.get_image(int(filters["image_id"]))
            self.access.require_image(user, "read", image.id)
            scoped_set = image.image_set_id
            if "image_set_id" in filters and int(filters["image_set_id"]) != scoped_set:
                return [], 0
            where.append("a.image_id = ?")
            params.append(image.id)
        elif "image_set_id" in filters:
            scoped_set = int(filters["image_set_id"])
            self.access.require_set(user, "read", scoped_set)
            where.append("a.image_id IN (SELECT id FROM images WHERE image_set_id = ?)")
            params.append(scoped_set)

        if scoped_set is not None:
            # blind-mode isolation applies to every read path
            if self.access.mode_for_set(scoped_set).mode == "blind":
                where.append("a.creator_id = ?")
                params.append(user.id)
        else:
            readable = self.access.teams_of(user.id, "read")
            if not readable:
                return [], 0
            where.append(f"s.team_id IN ({','.join('?' * len(readable))})")
            params.extend(readable)
            where.append("(s.mode != 'blind' OR a.creator_id = ?)")
            params.append(user.id)
        if not include_deleted:
            where.append("a.deleted = 0")
        if "template_id" in filters:
            where.append("a.template_id = ?")
            params.append(int(filters["template_id"]))
        if "creator_id" in filters:
            where.append("a.creator_id = ?")
            params.append(int(filters["creator_id"]))
        if "verified" in filters:
            clause = (
                "EXISTS (SELECT 1 FROM verifications v WHERE v.annotation_id = a.id"
                " AND v.verdict = 'accept')"
            )
            where.append(clause if filters["verified"] else f"NOT {clause}")
        if "window" in filters:
            try:
                wx1, wy1, wx2, wy2 = (float(v) for v in filters["window"])
            except (TypeError, ValueError) as exc:
                raise errors.BadFilter(f"window must be x1,y1,x2,y2 numbers: {exc}") from None
            where.append(
                "(a.bb_x1 IS NULL OR (a.bb_x1 <= ? AND a.bb_x2 >= ? AND a.bb_y1 <= ? AND a.bb_y2 >= ?))"
            )
            params.extend([wx2, wx1, wy2, wy1])

        if scoped_set is not None:
            base = "FROM annotations a WHERE " + " AND ".join(where)
        else:
            base = (
                "FROM annotations a JOIN images i ON i.id = a.image_id"
                " JOIN image_sets s ON s.id = i.image_set_id WHERE " + " AND ".join(where)
            )
        total = self.db.one(f"SELECT COUNT(*) AS n {base}", params)["n"]
        rows = self.db.query(
            f"SELECT a.* {base} ORDER BY a.id LIMIT ? OFFSET ?", [*params, limit, offset]
        )
        return self._records_batch(rows), total

    # --- versions ---

    def create_version(self, user, image_set_id: int, name: str, description: str = "") -> Version:
        """Freeze the set's image list and full annotation state, atomically."""
        self.access.require_set(user, "manage", image_set_id)
        with self.db.tx() as conn:
            image_ids = [r["id"] for r in conn.execute(
                "SELECT id FROM images WHERE image_set_id = ? ORDER BY id", (image_set_id,)
            ).fetchall()]
            snapshot = []
            for row in conn.execute(
                """
                SELECT a.*, i.public_name AS image_public_name, t.name AS template_name,
                       u.username AS creator_name
                FROM annotations a
                JOIN images i ON i.id = a.image_id
                JOIN templates t ON t.id = a.template_id
                JOIN users u ON u.id = a.creator_id
                WHERE i.image_set_id = ? ORDER BY a.id
                """,
                (image_set_id,),
            ).fetchall():
                verifications = [
                    {"user_id": v["user_id"], "verdict": v["verdict"], "timestamp": v["timestamp"]}
                    for v in conn.execute(
                        "SELECT * FROM verifications WHERE annotation_id = ? ORDER BY user_id",
                        (row["id"],),
                    ).fetchall()
                ]
                snapshot.append({
                    "id": row["id"],
                    "image_id": row["image_id"],
                    "image_public_name": row["image_public_name"],
                    "template_id": row["template_id"],
                    "template_name": row["template_name"],
                    "vector": row["vector"],
                    "creator_id": row["creator_id"],
                    "creator_name": row["creator_name"],
                    "last_editor_id": row["last_editor_id"],
                    "created_at": row["created_at"],
                    "updated_at": row["updated_at"],
                    "meta": json.loads(row["meta"]),
                    "deleted": bool(row["deleted"]),
                    "verifications": verifications,
                })
            version_id = conn.execute(
                "INSERT INTO versions (image_set_id, name, description, created_at, image_list,"
                " snapshot) VALUES (?, ?, ?, ?, ?, ?)",
                (image_set_id, name, description, utcnow(), json.dumps(image_ids),
                 json.dumps(snapshot)),
            ).lastrowid
        return self.get_version(version_id)

    def get_version(self, version_id: int) -> Version:
        row = self.db.one("SELECT * FROM versions WHERE id = ?", (version_id,))
        if row is None:
            raise errors.NotFound(f"version {version_id}")
        artifact_ids = [r["id"] for r in self.db.query(
            "SELECT id FROM artifacts WHERE version_id = ? ORDER BY id", (version_id,)
        )]
        return Version(
            id=row["id"],
            image_set_id=row["image_set_id"],
            name=row["name"],
            description=row["description"],
            created_at=row["created_at"],
            image_list=json.loads(row["image_list"]),
            snapshot=json.loads(row["snapshot"]),
            artifact_ids=artifact_ids,
        )

    def attach_artifact(self, user, version_id: int, name: str, mime_type: str, data: bytes) -> VersionArtifact:
        """Park a training artifact under a version; the snapshot is untouched."""
        version = self.get_version(version_id)
        self.access.require_set(user, "manage", version.image_set_id)
        safe = Path(name).name or "artifact"
        with self.db.tx() as conn:
            artifact_id = conn.execute(
                "INSERT INTO artifacts (version_id, name, mime_type, bytes_ref) VALUES (?, ?, ?, '')",
                (version_id, safe, mime_type),
            ).lastrowid
            rel = f"artifacts/{artifact_id}_{safe}"
            conn.execute("UPDATE artifacts SET bytes_ref = ? WHERE id = ?", (rel, artifact_id))
        path = self.root / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(data)
        return self.get_artifact(artifact_id)

    def get_artifact(self, artifact_id: int) -> VersionArtifact:
        row = self.db.one("SELECT * FROM artifacts WHERE id = ?", (artifact_id,))
        if row is None:
            raise errors.NotFound(f"artifact {artifact_id}")
        return VersionArtifact(row["id"], row["version_id"], row["name"], row["mime_type"],
                               row["bytes_ref"])

    def artifact_path(self, artifact_id: int) -> Path:
        return self.root / self.get_artifact(artifact_id).bytes_ref

    # --- export ---

    def export_annotations(self, user, image_set_id: int, version_id: int | None = None,
                           template: str = "{public_name},{template_name},{vector}") -> str:
        """Line-per-annotation text export from live state or a snapshot.

        Placeholders: {public_name} {template_name} {vector} {creator}
        {updated_at}.  Anything else, including {private_name}, is a hard
        UnknownPlaceholder error.  Lines are id-ordered, non-deleted only,
        and blind-mode visibility applies here as on every read path.
        """
        self.access.require_set(user, "read", image_set_id)
        for match in _PLACEHOLDER_RE.finditer(template):
            if match.group(1) not in EXPORT_PLACEHOLDERS:
                raise errors.UnknownPlaceholder(f"unknown placeholder {{{match.group(1)}}}")
        creator_only = self.access.creator_filter(user, image_set_id)

        if version_id is not None:
            version = self.get_version(version_id)
            if version.image_set_id != image_set_id:
                raise errors.NotFound(f"version {version_id} not on set {image_set_id}")
            entries = [
                {
                    "public_name": e["image_public_name"],
                    "template_name": e["template_name"],
                    "vector": e["vector"],
                    "creator": e["creator_name"],
                    "updated_at": e["updated_at"],
                }
                for e in version.snapshot
                if not e["deleted"] and (creator_only is None or e["creator_id"] == creator_only)
            ]
        else:
            sql = """
                SELECT a.vector AS vector, a.updated_at AS updated_at,
                       i.public_name AS public_name, t.name AS template_name,
                       u.username AS creator
                FROM annotations a
                JOIN images i ON i.id = a.image_id
                JOIN templates t ON t.id = a.template_id
                JOIN users u ON u.id = a.creator_id
                WHERE i.image_set_id = ? AND a.deleted = 0
            """
            params: list = [image_set_id]
            if creator_only is not None:
                sql += " AND a.creator_id = ?"
                params.append(creator_only)
            entries = [dict(r) for r in self.db.query(sql + " ORDER BY a.id", params)]

        def render(entry):
            return _PLACEHOLDER_RE.sub(lambda m: str(entry[m.group(1)]), template)

        return "".join(render(e) + "\n" for e in entries)
