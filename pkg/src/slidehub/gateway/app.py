"""The REST API: paginated CRUD, tiles, screening, maps, federation.

Every endpoint except /healthz and the scoped-token tile path requires
``Authorization: Token <opaque>``.  Handlers hold no cross-request state;
all serialization lives in the stores.  Interactive docs are disabled so
the unauthenticated surface stays exactly {/healthz, scoped tile path}.
"""

from __future__ import annotations

import io
from urllib.parse import urlencode

from fastapi import Depends, FastAPI, File, Form, Request, Response, UploadFile
from fastapi.responses import FileResponse, JSONResponse, PlainTextResponse, RedirectResponse

from slidehub import errors
from slidehub.core.records import RemoteImageRef
from slidehub.core.vectors import single_click_vector
from slidehub.gateway import schemas
from slidehub.gateway.config import Settings
from slidehub.hub import Hub

DEFAULT_LIMIT = 50
MAX_LIMIT = 1000

_STATUS_BY_ERROR = {
    errors.PermissionDenied: 403,
    errors.NotFound: 404,
    errors.ImageNotFound: 404,
    errors.TileOutOfRange: 404,
    errors.LevelOutOfRange: 404,
    errors.NoCellsInView: 404,
    errors.Deleted: 409,
    errors.DecodeError: 415,
    errors.StorageError: 507,
    errors.TokenRevoked: 401,
    errors.PeerUnreachable: 502,
    errors.AuthFailure: 502,
}


def _status_for(exc: errors.ServiceError) -> int:
    for cls in type(exc).__mro__:
        if cls in _STATUS_BY_ERROR:
            return _STATUS_BY_ERROR[cls]
    return 400


def create_app(settings: Settings, hub: Hub | None = None, peer_client_factory=None) -> FastAPI:
    hub = hub or Hub(settings.db_path, settings.storage_root, base_url=settings.base_url,
                     peer_client_factory=peer_client_factory)
    app = FastAPI(title="slidehub", docs_url=None, redoc_url=None, openapi_url=None)
    app.state.hub = hub
    app.state.settings = settings

    @app.exception_handler(errors.ServiceError)
    def service_error(_request, exc: errors.ServiceError):
        return JSONResponse(status_code=_status_for(exc),
                            content={"detail": str(exc), "code": exc.code})

    # --- auth ---
    # async: sub-millisecond sqlite lookups; keeps dependencies off the
    # threadpool so hot read endpoints can run directly on the loop

    async def current_user(request: Request):
        header = request.headers.get("Authorization", "")
        scheme, _, token = header.partition(" ")
        if scheme.lower() != "token" or not token:
            raise errors.TokenRevoked("missing Authorization: Token header")
        user = hub.access.authenticate(token.strip())
        if user is None:
            raise errors.TokenRevoked("invalid or deactivated token")
        return user

    async def pagination(limit: int = DEFAULT_LIMIT, offset: int = 0):
        if limit < 1 or limit > MAX_LIMIT:
            raise errors.BadFilter(f"limit must be within 1..{MAX_LIMIT}")
        if offset < 0:
            raise errors.BadFilter("offset must be >= 0")
        return limit, offset

    def page_links(request: Request, limit: int, offset: int, count: int):
        def link(new_offset):
            params = dict(request.query_params)
            params["limit"] = str(limit)
            params["offset"] = str(new_offset)
            return f"{request.url.path}?{urlencode(params)}"

        next_link = link(offset + limit) if offset + limit < count else None
        prev_link = link(max(offset - limit, 0)) if offset > 0 else None
        return next_link, prev_link

    def paged(request: Request, items: list, total: int, limit: int, offset: int) -> schemas.Page:
        next_link, prev_link = page_links(request, limit, offset, total)
        return schemas.Page(count=total, next=next_link, previous=prev_link, results=items)

    def slice_page(request: Request, items: list, limit: int, offset: int) -> schemas.Page:
        return paged(request, items[offset: offset + limit], len(items), limit, offset)

    def can_see_annotation(user, record) -> bool:
        team = hub.access.team_for_image(record.image_id)
        if not hub.access.check_permission(user, "read", team):
            return False
        mode = hub.access.mode_for_image(record.image_id)
        return mode.mode != "blind" or record.creator_id == user.id

    def visible_annotation(user, annotation_id: int):
        record = hub.annotations.get_annotation(annotation_id)
        if not can_see_annotation(user, record):
            raise errors.NotFound(f"annotation {annotation_id}")
        return record

    # --- health ---

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    # --- users ---

    @app.get("/api/v1/users/me")
    def whoami(user=Depends(current_user)):
        return schemas.UserOut.of(user)

    @app.delete("/api/v1/users/{user_id}")
    def deactivate_user(user_id: int, user=Depends(current_user)):
        return schemas.UserOut.of(hub.access.deactivate_user(user, user_id))

    # --- teams ---

    @app.get("/api/v1/teams/")
    def list_teams(request: Request, user=Depends(current_user), page=Depends(pagination)):
        rows = hub.db.query(
            "SELECT t.id AS id, t.name AS name FROM teams t JOIN memberships m ON m.team_id = t.id"
            " WHERE m.user_id = ? ORDER BY t.id",
            (user.id,),
        )
        return slice_page(request, [dict(r) for r in rows], *page)

    @app.post("/api/v1/teams/", status_code=201)
    def create_team(body: schemas.TeamIn, user=Depends(current_user)):
        team_id = hub.access.create_team(body.name)
        hub.access.set_membership(user.id, team_id,
                                  {"create", "read", "update", "delete", "verify", "manage"})
        return {"id": team_id, "name": body.name}

    @app.post("/api/v1/teams/{team_id}/members")
    def add_member(team_id: int, body: schemas.MembershipIn, user=Depends(current_user)):
        if not user.is_admin:
            hub.access.require(user, "manage", team_id)
        membership = hub.access.set_membership(body.user, team_id, set(body.rights))
        return {"user": membership.user_id, "team": membership.team_id,
                "rights": sorted(membership.rights)}

    # --- image sets ---

    def _readable_sets(user):
        readable = hub.access.teams_of(user.id, "read")
        if not readable:
            return []
        marks = ",".join("?" * len(readable))
        return [r["id"] for r in hub.db.query(
            f"SELECT id FROM image_sets WHERE team_id IN ({marks}) ORDER BY id", readable
        )]

    @app.get("/api/v1/imagesets/")
    def list_image_sets(request: Request, user=Depends(current_user), page=Depends(pagination)):
        sets = [
            schemas.ImageSetOut.of(hub.images.get_image_set(set_id), hub.access.mode_for_set(set_id))
            for set_id in _readable_sets(user)
        ]
        return slice_page(request, sets, *page)

    @app.post("/api/v1/imagesets/", status_code=201)
    def create_image_set(body: schemas.ImageSetIn, user=Depends(current_user)):
        image_set = hub.images.create_image_set(user, body.name, body.team, body.description,
                                                body.is_virtual)
        return schemas.ImageSetOut.of(image_set, hub.access.mode_for_set(image_set.id))

    @app.get("/api/v1/imagesets/{set_id}/")
    def get_image_set(set_id: int, user=Depends(current_user)):
        hub.access.require_set(user, "read", set_id)
        return schemas.ImageSetOut.of(hub.images.get_image_set(set_id),
                                      hub.access.mode_for_set(set_id))

    @app.patch("/api/v1/imagesets/{set_id}/mode")
    def set_mode(set_id: int, body: schemas.ModeIn, user=Depends(current_user)):
        mode = hub.access.set_mode(user, set_id, body.mode, body.required_verifications)
        return {"image_set": set_id, "mode": mode.mode,
                "required_verifications": mode.required_verifications}

    @app.post("/api/v1/imagesets/{set_id}/products")
    def attach_product(set_id: int, body: schemas.AttachProductIn, user=Depends(current_user)):
        hub.catalog.attach_product_to_set(user, set_id, body.product)
        return schemas.ImageSetOut.of(hub.images.get_image_set(set_id),
                                      hub.access.mode_for_set(set_id))

    @app.get("/api/v1/imagesets/{set_id}/export")
    def export_set(set_id: int, user=Depends(current_user), version: int | None = None,
                   template: str = "{public_name},{template_name},{vector}"):
        text = hub.annotations.export_annotations(user, set_id, version_id=version,
                                                  template=template)
        return PlainTextResponse(text)

    @app.post("/api/v1/imagesets/{set_id}/remote_refs", status_code=201)
    def add_remote_ref(set_id: int, body: schemas.RemoteRefIn, user=Depends(current_user)):
        ref = RemoteImageRef(body.instance_base_url, body.remote_public_name, body.width,
                             body.height, body.scoped_token)
        image = hub.federation.add_remote_ref(user, set_id, ref)
        return schemas.ImageOut.of(image)

    # --- images ---

    @app.get("/api/v1/images/")
    def list_images(request: Request, user=Depends(current_user), page=Depends(pagination),
                    image_set: int | None = None):
        if image_set is not None:
            hub.access.require_set(user, "read", image_set)
            records = hub.images.images_in_set(image_set)
        else:
            records = []
            for set_id in _readable_sets(user):
                records.extend(hub.images.images_in_set(set_id))
            records.sort(key=lambda r: r.id)
        return slice_page(request, [schemas.ImageOut.of(r) for r in records], *page)

    @app.post("/api/v1/images/", status_code=201)
    def upload_image(user=Depends(current_user), image_set: int = Form(...),
                     file: UploadFile = File(...)):
        data = file.file.read()
        record = hub.images.upload_image(user, image_set, file.filename or "upload", data)
        return schemas.ImageOut.of(record)

    @app.get("/api/v1/images/{image_id}/")
    def get_image(image_id: int, user=Depends(current_user)):
        hub.access.require_image(user, "read", image_id)
        return schemas.ImageOut.of(hub.images.get_image(image_id))

    @app.delete("/api/v1/images/{image_id}/")
    def delete_image(image_id: int, user=Depends(current_user)):
        hub.images.delete_image(user, image_id)
        return Response(status_code=204)

    @app.get("/api/v1/images/{image_id}/download")
    def download_original(image_id: int, user=Depends(current_user)):
        """Original upload; user tokens only, never scoped tile tokens."""
        hub.access.require_image(user, "read", image_id)
        path = hub.images.original_path(image_id)
        return FileResponse(path, media_type="application/octet-stream",
                            filename=hub.images.get_image(image_id).public_name)

    @app.post("/api/v1/images/{image_id}/verify")
    def mark_image(image_id: int, user=Depends(current_user)):
        hub.access.mark_image(user, image_id)
        verified, detail = hub.access.image_verified(image_id)
        return {"image": image_id, "verified": verified, "detail": detail}

    @app.get("/api/v1/images/{image_id}/verified")
    def image_verified(image_id: int, user=Depends(current_user)):
        hub.access.require_image(user, "read", image_id)
        verified, detail = hub.access.image_verified(image_id)
        return {"image": image_id, "verified": verified, "detail": detail}

    @app.get("/api/v1/images/{image_id}/score")
    def field_of_view_score(image_id: int, x1: float, y1: float, x2: float, y2: float,
                            user=Depends(current_user)):
        score = hub.maps.field_of_view_score(user, image_id, (x1, y1, x2, y2))
        return {"image": image_id, "window": [x1, y1, x2, y2], "score": score}

    # --- tiles ---

    _TILE_HEADERS = {"Cache-Control": "public, max-age=31536000, immutable"}

    @app.get("/api/v1/images/{image_id}/{frame:int}/{level:int}/{col:int}_{row:int}.{fmt}")
    def get_tile(image_id: int, frame: int, level: int, col: int, row: int, fmt: str,
                 user=Depends(current_user), proxy: int = 0):
        hub.access.require_image(user, "read", image_id)
        image = hub.images.get_image(image_id)
        if image.owner_instance is not None:
            if proxy:
                data = hub.federation.fetch_remote_tile(image_id, frame, level, col, row, fmt)
                media = "image/png" if fmt == "png" else "image/jpeg"
                return Response(content=data, media_type=media, headers=_TILE_HEADERS)
            url = hub.federation.remote_tile_url(image_id, frame, level, col, row, fmt)
            return RedirectResponse(url, status_code=307)
        data, media = hub.engine.get_tile(image_id, frame, level, col, row, fmt)
        return Response(content=data, media_type=media, headers=_TILE_HEADERS)

    @app.get("/api/v1/shared/{public_name}/{frame:int}/{level:int}/{col:int}_{row:int}.{fmt}")
    def get_shared_tile(public_name: str, frame: int, level: int, col: int, row: int, fmt: str,
                        token: str = ""):
        """Scoped-token tile path: the only endpoint a scoped token unlocks."""
        image_id = hub.federation.resolve_scoped_token(token, public_name)
        data, media = hub.engine.get_tile(image_id, frame, level, col, row, fmt)
        return Response(content=data, media_type=media, headers=_TILE_HEADERS)

    # --- annotation templates & products ---

    @app.get("/api/v1/annotationtypes/")
    def list_templates(request: Request, user=Depends(current_user), page=Depends(pagination),
                       image_set: int | None = None, product: int | None = None):
        if image_set is not None:
            hub.access.require_set(user, "read", image_set)
            templates = hub.catalog.templates_for_set(image_set)
        elif product is not None:
            templates = [hub.catalog.get_template(t)
                         for t in hub.catalog.get_product(product).template_ids]
        else:
            seen = {}
            for set_id in _readable_sets(user):
                for template in hub.catalog.templates_for_set(set_id):
                    seen[template.id] = template
            templates = [seen[k] for k in sorted(seen)]
        return slice_page(request, [schemas.TemplateOut.of(t) for t in templates], *page)

    @app.post("/api/v1/annotationtypes/", status_code=201)
    def create_template(body: schemas.TemplateIn, user=Depends(current_user)):
        template = hub.catalog.create_template(
            body.name, body.vector_kind, color=body.color, shortcut=body.shortcut,
            sort_order=body.sort_order, default_width=body.default_width,
            default_height=body.default_height,
        )
        return schemas.TemplateOut.of(template)

    @app.get("/api/v1/annotationtypes/{template_id}/")
    def get_template(template_id: int, user=Depends(current_user)):
        return schemas.TemplateOut.of(hub.catalog.get_template(template_id))

    @app.get("/api/v1/products/")
    def list_products(request: Request, user=Depends(current_user), page=Depends(pagination)):
        product_ids = sorted({
            pid for set_id in _readable_sets(user)
            for pid in hub.images.get_image_set(set_id).product_ids
        })
        products = [schemas.ProductOut.of(hub.catalog.get_product(p)) for p in product_ids]
        return slice_page(request, products, *page)

    @app.post("/api/v1/products/", status_code=201)
    def create_product(body: schemas.ProductIn, user=Depends(current_user)):
        return schemas.ProductOut.of(hub.catalog.create_product(body.name, body.description))

    @app.get("/api/v1/products/{product_id}/")
    def get_product(product_id: int, user=Depends(current_user)):
        return schemas.ProductOut.of(hub.catalog.get_product(product_id))

    @app.post("/api/v1/products/{product_id}/templates")
    def add_template_to_product(product_id: int, body: schemas.ProductTemplateIn,
                                user=Depends(current_user)):
        return schemas.ProductOut.of(hub.catalog.add_template_to_product(product_id, body.template))

    # --- annotations ---

    @app.get("/api/v1/annotations/")
    async def list_annotations(request: Request, user=Depends(current_user),
                               page=Depends(pagination),
                               image: int | None = None, image_set: int | None = None,
                               template: int | None = None, creator: int | None = None,
                               verified: bool | None = None, window: str | None = None,
                               include_deleted: int = 0):
        # async on purpose: chunk-wise loading fires thousands of these
        # per slide and the handler is a quick indexed query
        filters: dict = {}
        if image is not None:
            filters["image_id"] = image
        if image_set is not None:
            filters["image_set_id"] = image_set
        if template is not None:
            filters["template_id"] = template
        if creator is not None:
            filters["creator_id"] = creator
        if verified is not None:
            filters["verified"] = verified
        if window is not None:
            parts = window.split(",")
            if len(parts) != 4:
                raise errors.BadFilter("window must be x1,y1,x2,y2")
            filters["window"] = tuple(parts)
        limit, offset = page
        records, total = hub.annotations.query_annotations(
            user, filters, limit=limit, offset=offset, include_deleted=bool(include_deleted)
        )
        return paged(request, [schemas.AnnotationOut.of(r) for r in records], total, limit, offset)

    @app.post("/api/v1/annotations/", status_code=201)
    def create_annotation(body: schemas.AnnotationIn, user=Depends(current_user)):
        record = hub.annotations.create_annotation(user, body.image, body.template, body.vector,
                                                   meta=body.meta)
        return schemas.AnnotationOut.of(record)

    @app.post("/api/v1/annotations/single_click", status_code=201)
    def create_single_click(body: schemas.SingleClickIn, user=Depends(current_user)):
        template = hub.catalog.get_template(body.template)
        image = hub.images.get_image(body.image)
        vector = single_click_vector(template.vector_kind, template.default_width,
                                     template.default_height, body.x, body.y,
                                     image.width, image.height)
        record = hub.annotations.create_annotation(user, body.image, body.template, vector,
                                                   meta=body.meta)
        return schemas.AnnotationOut.of(record)

    @app.get("/api/v1/annotations/{annotation_id}/")
    async def get_annotation(annotation_id: int, user=Depends(current_user)):
        return schemas.AnnotationOut.of(visible_annotation(user, annotation_id))

    @app.patch("/api/v1/annotations/{annotation_id}/")
    def update_annotation(annotation_id: int, body: schemas.AnnotationPatch,
                          user=Depends(current_user)):
        visible_annotation(user, annotation_id)
        record = hub.annotations.update_annotation(user, annotation_id, new_vector=body.vector,
                                                   new_template=body.template, new_meta=body.meta)
        return schemas.AnnotationOut.of(record)

    @app.delete("/api/v1/annotations/{annotation_id}/")
    def delete_annotation(annotation_id: int, user=Depends(current_user)):
        visible_annotation(user, annotation_id)
        return schemas.AnnotationOut.of(hub.annotations.delete_annotation(user, annotation_id))

    @app.post("/api/v1/annotations/{annotation_id}/verify")
    def verify_annotation(annotation_id: int, body: schemas.VerdictIn, user=Depends(current_user)):
        visible_annotation(user, annotation_id)
        verifications = hub.annotations.verify_annotation(user, annotation_id, body.verdict)
        return {"annotation": annotation_id,
                "verifications": [
                    schemas.VerificationOut(user=v.user_id, verdict=v.verdict,
                                            timestamp=v.timestamp)
                    for v in verifications
                ]}

    @app.post("/api/v1/annotations/{annotation_id}/media", status_code=201)
    def attach_media(annotation_id: int, user=Depends(current_user),
                     file: UploadFile = File(...)):
        visible_annotation(user, annotation_id)
        media = hub.annotations.add_media(user, annotation_id, file.filename or "attachment",
                                          file.content_type or "application/octet-stream",
                                          file.file.read())
        return schemas.MediaOut.of(media)

    # --- media ---

    @app.get("/api/v1/media/")
    def list_media(request: Request, user=Depends(current_user), page=Depends(pagination),
                   annotation: int | None = None):
        if annotation is not None:
            record = visible_annotation(user, annotation)
            media = [hub.annotations.get_media(m) for m in record.media_ids]
        else:
            media = []
            for row in hub.db.query("SELECT id, annotation_id FROM media ORDER BY id"):
                try:
                    record = hub.annotations.get_annotation(row["annotation_id"])
                except errors.NotFound:
                    continue
                if can_see_annotation(user, record):
                    media.append(hub.annotations.get_media(row["id"]))
        return slice_page(request, [schemas.MediaOut.of(m) for m in media], *page)

    @app.get("/api/v1/media/{media_id}/download")
    def download_media(media_id: int, user=Depends(current_user)):
        media = hub.annotations.get_media(media_id)
        visible_annotation(user, media.annotation_id)
        return FileResponse(hub.annotations.media_path(media_id), media_type=media.mime_type,
                            filename=media.name)

    # --- versions ---

    @app.get("/api/v1/versions/")
    def list_versions(request: Request, user=Depends(current_user), page=Depends(pagination),
                      image_set: int | None = None):
        if image_set is not None:
            hub.access.require_set(user, "read", image_set)
            set_ids = [image_set]
        else:
            set_ids = _readable_sets(user)
        versions = []
        for set_id in set_ids:
            for row in hub.db.query(
                "SELECT id FROM versions WHERE image_set_id = ? ORDER BY id", (set_id,)
            ):
                versions.append(hub.annotations.get_version(row["id"]))
        versions.sort(key=lambda v: v.id)
        return slice_page(request, [schemas.VersionOut.of(v) for v in versions], *page)

    @app.post("/api/v1/versions/", status_code=201)
    def create_version(body: schemas.VersionIn, user=Depends(current_user)):
        version = hub.annotations.create_version(user, body.image_set, body.name, body.description)
        return schemas.VersionOut.of(version)

    @app.get("/api/v1/versions/{version_id}/")
    def get_version(version_id: int, user=Depends(current_user)):
        version = hub.annotations.get_version(version_id)
        hub.access.require_set(user, "read", version.image_set_id)
        return schemas.VersionOut.of(version)

    @app.post("/api/v1/versions/{version_id}/artifacts", status_code=201)
    def attach_artifact(version_id: int, user=Depends(current_user), file: UploadFile = File(...)):
        artifact = hub.annotations.attach_artifact(
            user, version_id, file.filename or "artifact",
            file.content_type or "application/octet-stream", file.file.read(),
        )
        return schemas.ArtifactOut.of(artifact)

    @app.get("/api/v1/artifacts/{artifact_id}/download")
    def download_artifact(artifact_id: int, user=Depends(current_user)):
        artifact = hub.annotations.get_artifact(artifact_id)
        version = hub.annotations.get_version(artifact.version_id)
        hub.access.require_set(user, "read", version.image_set_id)
        return FileResponse(hub.annotations.artifact_path(artifact_id),
                            media_type=artifact.mime_type, filename=artifact.name)

    # --- screening ---

    def screening_payload(user, smap):
        return schemas.ScreeningOut.of(smap, hub.screening.grid_for(smap))

    @app.get("/api/v1/screening/")
    def screening_for_image(image: int, user=Depends(current_user)):
        hub.access.require_image(user, "read", image)
        smap = hub.screening.map_for_image(user, image)
        if smap is None:
            raise errors.NotFound(f"no screening map for image {image}")
        return screening_payload(user, smap)

    @app.post("/api/v1/screening/", status_code=201)
    def register_screening(body: schemas.ScreeningIn, user=Depends(current_user)):
        smap = hub.screening.register_map(user, body.image, body.patch_w, body.patch_h)
        return screening_payload(user, smap)

    @app.get("/api/v1/screening/{map_id}/")
    def resume_screening(map_id: int, user=Depends(current_user)):
        state = hub.screening.resume(user, map_id)
        payload = screening_payload(user, state["map"]).model_dump()
        payload["current_rect"] = list(state["current_rect"])
        return payload

    @app.post("/api/v1/screening/{map_id}/mark")
    def mark_screened(map_id: int, body: schemas.CellIn, user=Depends(current_user)):
        smap, progress = hub.screening.mark_screened(user, map_id, body.col, body.row)
        return screening_payload(user, smap)

    @app.post("/api/v1/screening/{map_id}/position")
    def record_position(map_id: int, body: schemas.CellIn, user=Depends(current_user)):
        hub.screening.record_position(user, map_id, body.col, body.row)
        return screening_payload(user, hub.screening.get_map(user, map_id))

    # --- layout maps ---

    def registry_payload(image, registry):
        return {
            "map_image": schemas.ImageOut.of(image).model_dump(),
            "registry": schemas.RegistryOut(
                map_image_id=registry.map_image_id, map_kind=registry.map_kind,
                cell_size=registry.cell_size,
                entries=[schemas.RegistryEntryOut(
                    cell=tuple(e.cell), col=e.col, row=e.row,
                    source_image_id=e.source_image_id,
                    source_annotation_id=e.source_annotation_id,
                ) for e in registry.entries],
            ).model_dump(),
        }

    @app.post("/api/v1/maps/class_grid", status_code=201)
    def build_class_grid(body: schemas.ClassGridIn, user=Depends(current_user)):
        image, registry = hub.maps.build_class_grid(user, body.image_set, body.template,
                                                    cell_size=body.cell_size)
        return registry_payload(image, registry)

    @app.post("/api/v1/maps/density", status_code=201)
    def build_density_map(body: schemas.DensityMapIn, user=Depends(current_user)):
        image, registry = hub.maps.build_density_map(
            user, body.image_set, bin_width=body.bin_width, cell_size=body.cell_size,
            score_key=body.score_key, template_id=body.template,
        )
        return registry_payload(image, registry)

    @app.post("/api/v1/maps/cluster", status_code=201)
    def build_cluster_map(body: schemas.ClusterMapIn, user=Depends(current_user)):
        patches = [(p.annotation, p.u, p.v) for p in body.patches]
        image, registry = hub.maps.build_cluster_map(user, patches, body.canvas_w, body.canvas_h,
                                                     body.cell_size, body.image_set)
        return registry_payload(image, registry)

    @app.get("/api/v1/maps/{map_image_id}/registry")
    def get_registry(map_image_id: int, user=Depends(current_user)):
        hub.access.require_image(user, "read", map_image_id)
        registry = hub.maps.registry_for(map_image_id)
        return registry_payload(hub.images.get_image(map_image_id), registry)

    @app.post("/api/v1/maps/{map_image_id}/corrections")
    def sync_correction(map_image_id: int, body: schemas.CorrectionIn, user=Depends(current_user)):
        record = hub.maps.sync_correction(user, map_image_id, body.col, body.row,
                                          new_template=body.new_template, delete=body.delete,
                                          verify=body.verify)
        return schemas.AnnotationOut.of(record)

    # --- federation ---

    @app.post("/api/v1/federation/share", status_code=201)
    def share_image(body: schemas.ShareIn, user=Depends(current_user)):
        ref = hub.federation.share_image(user, body.image, body.peer)
        return schemas.RemoteRefOut(
            instance_base_url=ref.instance_base_url, remote_public_name=ref.remote_public_name,
            width=ref.width, height=ref.height, scoped_token=ref.scoped_token,
        )

    @app.post("/api/v1/federation/revoke")
    def revoke_grant(body: schemas.RevokeIn, user=Depends(current_user)):
        hub.federation.revoke_grant(user, body.token)
        return {"revoked": True}

    @app.get("/api/v1/federation/grants")
    def list_grants(image: int, user=Depends(current_user)):
        return {"image": image, "grants": hub.federation.grants_for_image(user, image)}

    @app.post("/api/v1/federation/import")
    def import_annotations(body: schemas.ImportIn, user=Depends(current_user)):
        count = hub.federation.import_annotations(
            user, body.peer_base_url, body.peer_token, body.remote_image_set,
            body.target_image_set,
        )
        return {"imported": count}

    return app
