"""Access control: deny-by-default team rights and annotation modes.

Rights live on team memberships only; a resource resolves to a team
through its image set and the check is a single lookup.  The three
crowd-annotation modes gate what annotation reads return:

* cooperative / second_opinion: everyone with read rights sees everything
* blind: each user sees only their own annotations, whatever their role

Deleted users are anonymized in place (username scrubbed, login disabled)
so annotation audit fields keep resolving.
"""

from __future__ import annotations

import secrets

from slidehub import errors
from slidehub.core.records import ANNOTATION_MODES, RIGHTS, AnnotationMode, TeamMembership, User
from slidehub.store.db import Database, utcnow


def _row_user(row) -> User:
    return User(
        id=row["id"],
        username=row["username"],
        active=bool(row["active"]),
        anonymized=bool(row["anonymized"]),
        is_admin=bool(row["is_admin"]),
    )


class AccessService:
    def __init__(self, db: Database):
        self.db = db

    # --- users ---

    def create_user(self, username: str, is_admin: bool = False) -> tuple:
        """Create a user; returns (User, api_token)."""
        token = secrets.token_hex(16)
        with self.db.tx() as conn:
            cur = conn.execute(
                "INSERT INTO users (username, token, is_admin) VALUES (?, ?, ?)",
                (username, token, int(is_admin)),
            )
            user = self.get_user(cur.lastrowid)
        return user, token

    def get_user(self, user_id: int) -> User:
        row = self.db.one("SELECT * FROM users WHERE id = ?", (user_id,))
        if row is None:
            raise errors.NotFound(f"user {user_id}")
        return _row_user(row)

    def user_by_name(self, username: str):
        row = self.db.one("SELECT * FROM users WHERE username = ?", (username,))
        return _row_user(row) if row else None

    def authenticate(self, token: str):
        """User for an API token; None when unknown or deactivated."""
        row = self.db.one("SELECT * FROM users WHERE token = ? AND active = 1", (token,))
        return _row_user(row) if row else None

    def deactivate_user(self, admin: User, user_id: int) -> User:
        """Anonymize and deactivate; annotations and versions stay intact.

        Permitted for instance admins and for holders of the manage right
        on a team shared with the target.  Idempotent.
        """
        target = self.get_user(user_id)
        if not admin.is_admin and not self._manages_shared_team(admin, user_id):
            raise errors.PermissionDenied("deactivation needs manage right on a shared team")
        with self.db.tx() as conn:
            conn.execute(
                "UPDATE users SET username = ?, active = 0, anonymized = 1 WHERE id = ?",
                (f"user-{user_id}", user_id),
            )
        return self.get_user(user_id)

    def _manages_shared_team(self, admin: User, user_id: int) -> bool:
        row = self.db.one(
            """
            SELECT 1 FROM memberships a JOIN memberships b ON a.team_id = b.team_id
            WHERE a.user_id = ? AND b.user_id = ? AND instr(a.rights, 'manage') > 0
            """,
            (admin.id, user_id),
        )
        return row is not None

    # --- teams & rights ---

    def create_team(self, name: str) -> int:
        with self.db.tx() as conn:
            return conn.execute("INSERT INTO teams (name) VALUES (?)", (name,)).lastrowid

    def team_exists(self, team_id: int) -> bool:
        return self.db.one("SELECT 1 FROM teams WHERE id = ?", (team_id,)) is not None

    def set_membership(self, user_id: int, team_id: int, rights) -> TeamMembership:
        rights = frozenset(rights)
        bad = rights - RIGHTS
        if bad:
            raise errors.BadFilter(f"unknown rights: {sorted(bad)}")
        with self.db.tx() as conn:
            conn.execute(
                "INSERT INTO memberships (user_id, team_id, rights) VALUES (?, ?, ?) "
                "ON CONFLICT (user_id, team_id) DO UPDATE SET rights = excluded.rights",
                (user_id, team_id, ",".join(sorted(rights))),
            )
        return TeamMembership(user_id=user_id, team_id=team_id, rights=rights)

    def rights_for(self, user_id: int, team_id: int) -> frozenset:
        row = self.db.one(
            "SELECT rights FROM memberships WHERE user_id = ? AND team_id = ?",
            (user_id, team_id),
        )
        return frozenset(row["rights"].split(",")) if row and row["rights"] else frozenset()

    def teams_of(self, user_id: int, right: str = "read") -> list:
        """Team ids where the user holds a given right."""
        rows = self.db.query("SELECT team_id, rights FROM memberships WHERE user_id = ?", (user_id,))
        return [r["team_id"] for r in rows if right in r["rights"].split(",")]

    def members_with_right(self, team_id: int, right: str) -> list:
        """Active user ids holding a right on a team."""
        rows = self.db.query(
            """
            SELECT m.user_id, m.rights FROM memberships m
            JOIN users u ON u.id = m.user_id AND u.active = 1
            WHERE m.team_id = ?
            """,
            (team_id,),
        )
        return [r["user_id"] for r in rows if right in r["rights"].split(",")]

    def check_permission(self, user: User, action: str, team_id: int) -> bool:
        """allow iff the user is active and holds the action right; deny default."""
        if user is None or not user.active:
            return False
        return action in self.rights_for(user.id, team_id)

    def require(self, user: User, action: str, team_id: int) -> None:
        if not self.check_permission(user, action, team_id):
            raise errors.PermissionDenied(f"{action} denied on team {team_id}")

    # --- resource -> team resolution ---

    def team_for_set(self, image_set_id: int) -> int:
        row = self.db.one("SELECT team_id FROM image_sets WHERE id = ?", (image_set_id,))
        if row is None:
            raise errors.NotFound(f"image set {image_set_id}")
        return row["team_id"]

    def team_for_image(self, image_id: int) -> int:
        row = self.db.one(
            "SELECT s.team_id AS team_id FROM images i JOIN image_sets s ON s.id = i.image_set_id "
            "WHERE i.id = ?",
            (image_id,),
        )
        if row is None:
            raise errors.NotFound(f"image {image_id}")
        return row["team_id"]

    def require_set(self, user: User, action: str, image_set_id: int) -> None:
        self.require(user, action, self.team_for_set(image_set_id))

    def require_image(self, user: User, action: str, image_id: int) -> None:
        self.require(user, action, self.team_for_image(image_id))

    # --- annotation modes ---

    def set_mode(self, user: User, image_set_id: int, mode: str, required_verifications: int = 1) -> AnnotationMode:
        if mode not in ANNOTATION_MODES:
            raise errors.BadFilter(f"unknown mode {mode!r}")
        if required_verifications < 1:
            raise errors.BadFilter("required_verifications must be >= 1")
        self.require_set(user, "manage", image_set_id)
        with self.db.tx() as conn:
            conn.execute(
                "UPDATE image_sets SET mode = ?, required_verifications = ? WHERE id = ?",
                (mode, required_verifications, image_set_id),
            )
        return AnnotationMode(image_set_id, mode, required_verifications)

    def mode_for_set(self, image_set_id: int) -> AnnotationMode:
        row = self.db.one(
            "SELECT mode, required_verifications FROM image_sets WHERE id = ?", (image_set_id,)
        )
        if row is None:
            raise errors.NotFound(f"image set {image_set_id}")
        return AnnotationMode(image_set_id, row["mode"], row["required_verifications"])

    def mode_for_image(self, image_id: int) -> AnnotationMode:
        row = self.db.one("SELECT image_set_id FROM images WHERE id = ?", (image_id,))
        if row is None:
            raise errors.NotFound(f"image {image_id}")
        return self.mode_for_set(row["image_set_id"])

    def creator_filter(self, user: User, image_set_id: int):
        """Creator id annotation reads must be restricted to, or None.

        Blind mode restricts every read path to the requester's own
        annotations; role does not override the mode.
        """
        mode = self.mode_for_set(image_set_id)
        return user.id if mode.mode == "blind" else None

    def visible_annotations(self, user: User, image_id: int) -> set:
        """Ids of non-deleted annotations on an image the user may see."""
        self.require_image(user, "read", image_id)
        mode = self.mode_for_image(image_id)
        sql = "SELECT id FROM annotations WHERE image_id = ? AND deleted = 0"
        params = [image_id]
        if mode.mode == "blind":
            sql += " AND creator_id = ?"
            params.append(user.id)
        return {row["id"] for row in self.db.query(sql, params)}

    # --- image-level verification ---

    def mark_image(self, user: User, image_id: int) -> None:
        """Record that a user finished reviewing an image (idempotent).

        Annotators and verifiers both mark; cooperative mode needs one
        mark, blind mode needs a mark from every active annotator.
        """
        team = self.team_for_image(image_id)
        if not (self.check_permission(user, "verify", team) or self.check_permission(user, "create", team)):
            raise errors.PermissionDenied("marking an image needs verify or create rights")
        with self.db.tx() as conn:
            conn.execute(
                "INSERT OR IGNORE INTO image_marks (image_id, user_id, timestamp) VALUES (?, ?, ?)",
                (image_id, user.id, utcnow()),
            )

    def image_verified(self, image_id: int) -> tuple:
        """(verified, detail) under the set's annotation mode.

        cooperative: any one user marked the image.
        blind: every active user with create rights on the team marked it.
        second_opinion: every non-deleted annotation collected the required
        number of distinct accept verdicts (vacuously true with none).
        """
        row = self.db.one("SELECT image_set_id FROM images WHERE id = ?", (image_id,))
        if row is None:
            raise errors.NotFound(f"image {image_id}")
        mode = self.mode_for_set(row["image_set_id"])
        marks = [r["user_id"] for r in self.db.query(
            "SELECT user_id FROM image_marks WHERE image_id = ? ORDER BY user_id", (image_id,)
        )]

        if mode.mode == "cooperative":
            return len(marks) >= 1, {"mode": mode.mode, "marked_by": marks}

        if mode.mode == "blind":
            required = sorted(self.members_with_right(self.team_for_image(image_id), "create"))
            missing = sorted(set(required) - set(marks))
            return (len(missing) == 0 and len(required) > 0), {
                "mode": mode.mode,
                "marked_by": marks,
                "required_users": required,
                "missing": missing,
            }

        # second_opinion
        counts = {
            r["id"]: r["accepts"]
            for r in self.db.query(
                """
                SELECT a.id AS id, (
                    SELECT COUNT(*) FROM verifications v
                    WHERE v.annotation_id = a.id AND v.verdict = 'accept'
                ) AS accepts
                FROM annotations a WHERE a.image_id = ? AND a.deleted = 0
                """,
                (image_id,),
            )
        }
        need = mode.required_verifications
        pending = sorted(aid for aid, got in counts.items() if got < need)
        return len(pending) == 0, {
            "mode": mode.mode,
            "required_verifications": need,
            "annotations": len(counts),
            "pending": pending,
        }
