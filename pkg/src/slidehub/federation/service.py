"""Virtual image sets across instances.

The owning instance issues revocable scoped tokens that grant exactly one
thing: tile reads for one image.  A central instance stores shadow image
records (public name + dimensions only) and keeps all annotations
locally; pixel requests are redirected to the owner (preferred) or
proxied.  No private filename, path, or original container ever crosses
the boundary.
"""

from __future__ import annotations

import secrets

import httpx

from slidehub import errors
from slidehub.core.records import RemoteImageRef
from slidehub.store.db import utcnow


def default_peer_client(base_url: str, token: str | None = None) -> httpx.Client:
    headers = {"Authorization": f"Token {token}"} if token else {}
    return httpx.Client(base_url=base_url, headers=headers, timeout=15.0)


class FederationService:
    def __init__(self, hub, base_url: str, peer_client_factory=None):
        self.hub = hub
        self.db = hub.db
        self.base_url = base_url.rstrip("/")
        self._peer_client_factory = peer_client_factory or default_peer_client

    # --- owner side: grants ---

    def share_image(self, admin, image_id: int, peer: str) -> RemoteImageRef:
        """Issue a scoped tile-read token for one local image to a peer."""
        image = self.hub.images.get_image(image_id)
        if image.owner_instance is not None:
            raise errors.NotFound(f"image {image_id} is not owned by this instance")
        team = self.hub.access.team_for_image(image_id)
        if not admin.is_admin and not self.hub.access.check_permission(admin, "manage", team):
            raise errors.PermissionDenied("sharing needs manage rights or instance admin")
        token = secrets.token_urlsafe(24)
        with self.db.tx() as conn:
            conn.execute(
                "INSERT INTO share_grants (image_id, peer, token, created_at) VALUES (?, ?, ?, ?)",
                (image_id, peer, token, utcnow()),
            )
        return RemoteImageRef(
            instance_base_url=self.base_url,
            remote_public_name=image.public_name,
            width=image.width,
            height=image.height,
            scoped_token=token,
        )

    def revoke_grant(self, admin, token: str) -> None:
        row = self.db.one("SELECT * FROM share_grants WHERE token = ?", (token,))
        if row is None:
            raise errors.NotFound("unknown grant")
        team = self.hub.access.team_for_image(row["image_id"])
        if not admin.is_admin and not self.hub.access.check_permission(admin, "manage", team):
            raise errors.PermissionDenied("revocation needs manage rights or instance admin")
        with self.db.tx() as conn:
            conn.execute("UPDATE share_grants SET revoked = 1 WHERE token = ?", (token,))

    def grants_for_image(self, admin, image_id: int) -> list:
        team = self.hub.access.team_for_image(image_id)
        if not admin.is_admin and not self.hub.access.check_permission(admin, "manage", team):
            raise errors.PermissionDenied("listing grants needs manage rights")
        return [dict(r) for r in self.db.query(
            "SELECT id, peer, token, revoked, created_at FROM share_grants WHERE image_id = ?",
            (image_id,),
        )]

    def resolve_scoped_token(self, token: str, public_name: str) -> int:
        """Image id a scoped token unlocks; tile reads only."""
        row = self.db.one("SELECT * FROM share_grants WHERE token = ?", (token,))
        if row is None or row["revoked"]:
            raise errors.TokenRevoked("scoped token unknown or revoked")
        image = self.hub.images.get_image(row["image_id"])
        if image.public_name != public_name:
            raise errors.TokenRevoked("scoped token does not match this image")
        return image.id

    # --- central side: virtual sets ---

    def add_remote_ref(self, user, virtual_set_id: int, ref: RemoteImageRef):
        """Attach a peer-issued image reference to a virtual set (idempotent)."""
        image_set = self.hub.images.get_image_set(virtual_set_id)
        if not image_set.is_virtual:
            raise errors.NotVirtual(f"set {virtual_set_id} is not virtual")
        self.hub.access.require_set(user, "manage", virtual_set_id)
        return self.hub.images.register_remote_image(
            virtual_set_id, ref.instance_base_url.rstrip("/"), ref.remote_public_name,
            ref.width, ref.height, ref.scoped_token,
        )

    def remote_tile_url(self, image_id: int, frame: int, level: int, col: int, row: int,
                        fmt: str = "png") -> str:
        image = self.hub.images.get_image(image_id)
        if image.owner_instance is None:
            raise errors.NotFound(f"image {image_id} is local")
        token = self.hub.images.remote_token(image_id)
        if not token:
            raise errors.TokenRevoked(f"no scoped token stored for image {image_id}")
        return (
            f"{image.owner_instance}/api/v1/shared/{image.public_name}"
            f"/{frame}/{level}/{col}_{row}.{fmt}?token={token}"
        )

    def fetch_remote_tile(self, image_id: int, frame: int, level: int, col: int, row: int,
                          fmt: str = "png") -> bytes:
        """Proxy fallback: pull the tile through this instance."""
        image = self.hub.images.get_image(image_id)
        url = self.remote_tile_url(image_id, frame, level, col, row, fmt)
        base = image.owner_instance
        path = url[len(base):]
        try:
            with self._peer_client_factory(base) as client:
                response = client.get(path)
        except httpx.HTTPError as exc:
            raise errors.PeerUnreachable(f"peer {base} unreachable: {exc}") from exc
        if response.status_code in (401, 403):
            raise errors.TokenRevoked("owner rejected the scoped token")
        if response.status_code == 404:
            raise errors.TileOutOfRange("owner has no such tile")
        if response.status_code != 200:
            raise errors.PeerUnreachable(f"peer returned {response.status_code}")
        return response.content

    # --- central side: annotation import ---

    def import_annotations(self, user, peer_base_url: str, peer_token: str,
                           remote_set_id: int, target_set_id: int) -> int:
        """Pull a peer set's annotations into a local set, idempotently.

        Upserts by (peer instance, peer annotation id); re-imports update
        changed rows and soft-delete rows the peer no longer reports.
        Returns the number of live annotations synced.
        """
        peer_base_url = peer_base_url.rstrip("/")
        self.hub.access.require_set(user, "manage", target_set_id)

        with self._peer_client_factory(peer_base_url, peer_token) as client:
            remote_images = self._walk(client, "/api/v1/images/", {"image_set": remote_set_id})
            remote_templates = {
                t["id"]: t
                for t in self._walk(client, "/api/v1/annotationtypes/", {"image_set": remote_set_id})
            }
            remote_annotations = self._walk(
                client, "/api/v1/annotations/",
                {"image_set": remote_set_id, "include_deleted": 1},
            )

        image_by_peer_id = {}
        for remote in remote_images:
            image_by_peer_id[remote["id"]] = self.hub.images.register_remote_image(
                target_set_id, peer_base_url, remote["name"], remote["width"], remote["height"],
                scoped_token=None,
            )

        template_map = {}
        seen = set()
        live = 0
        for remote in remote_annotations:
            origin_id = remote["id"]
            seen.add(origin_id)
            image = image_by_peer_id.get(remote["image"])
            if image is None:
                continue
            peer_template = remote_templates.get(remote["template"])
            if peer_template is None:
                continue
            template_id = template_map.get(remote["template"])
            if template_id is None:
                template_id = self._ensure_template(user, target_set_id, peer_template)
                template_map[remote["template"]] = template_id
            self.hub.annotations.upsert_imported(
                user, image.id, template_id, remote["vector"], remote.get("meta") or {},
                bool(remote.get("deleted")), origin=(peer_base_url, origin_id),
            )
            if not remote.get("deleted"):
                live += 1

        # peer hard-purged rows vanish from its listing: soft-delete them here
        for row in self.db.query(
            """
            SELECT a.id AS id, a.origin_id AS origin_id FROM annotations a
            JOIN images i ON i.id = a.image_id
            WHERE i.image_set_id = ? AND a.origin_instance = ? AND a.deleted = 0
            """,
            (target_set_id, peer_base_url),
        ):
            if row["origin_id"] not in seen:
                self.hub.annotations.delete_annotation(user, row["id"])
        return live

    def _ensure_template(self, user, target_set_id: int, peer_template: dict) -> int:
        """Local template matching a peer one by (name, kind); clone if absent."""
        for template in self.hub.catalog.templates_for_set(target_set_id):
            if (template.name, template.vector_kind) == (
                peer_template["name"], peer_template["vector_kind"]
            ):
                return template.id
        created = self.hub.catalog.create_template(
            peer_template["name"], peer_template["vector_kind"],
            color=peer_template.get("color") or "#ff0000",
            sort_order=peer_template.get("sort_order") or 0,
            default_width=peer_template.get("default_width"),
            default_height=peer_template.get("default_height"),
        )
        product = self._import_product(user, target_set_id)
        self.hub.catalog.add_template_to_product(product, created.id)
        return created.id

    def _import_product(self, user, target_set_id: int) -> int:
        image_set = self.hub.images.get_image_set(target_set_id)
        for product_id in image_set.product_ids:
            if self.hub.catalog.get_product(product_id).name == "imported":
                return product_id
        product = self.hub.catalog.create_product("imported", "templates cloned by federation import")
        self.hub.catalog.attach_product_to_set(user, target_set_id, product.id)
        return product.id

    def _walk(self, client: httpx.Client, path: str, params: dict) -> list:
        """Collect every page of a peer list endpoint."""
        results = []
        params = {**params, "limit": 500}
        url = None
        while True:
            try:
                response = client.get(url or path, params=None if url else params)
            except httpx.HTTPError as exc:
                raise errors.PeerUnreachable(f"peer unreachable: {exc}") from exc
            if response.status_code in (401, 403):
                raise errors.AuthFailure(f"peer rejected credentials ({response.status_code})")
            if response.status_code == 404:
                raise errors.NotFound(f"peer has no {path}")
            if response.status_code != 200:
                raise errors.PeerUnreachable(f"peer returned {response.status_code} for {path}")
            page = response.json()
            results.extend(page["results"])
            url = page.get("next")
            if not url:
                return results
