"""Pydantic schemas for API request/response bodies.

Serialization is the privacy boundary: image responses expose the
pseudonymized name as ``name`` and no schema anywhere carries the private
filename.
"""

from __future__ import annotations

import base64

from pydantic import BaseModel, Field

from slidehub.core import records
from slidehub.screening.service import ScreeningService


class Page(BaseModel):
    count: int
    next: str | None = None
    previous: str | None = None
    results: list


class UserOut(BaseModel):
    id: int
    username: str
    active: bool
    anonymized: bool

    @classmethod
    def of(cls, user: records.User) -> "UserOut":
        return cls(id=user.id, username=user.username, active=user.active,
                   anonymized=user.anonymized)


class ImageOut(BaseModel):
    id: int
    name: str  # pseudonymized public name
    width: int
    height: int
    frame_count: int
    image_set: int
    owner_instance: str | None = None

    @classmethod
    def of(cls, image: records.ImageRecord) -> "ImageOut":
        return cls(id=image.id, name=image.public_name, width=image.width, height=image.height,
                   frame_count=image.frame_count, image_set=image.image_set_id,
                   owner_instance=image.owner_instance)


class ImageSetOut(BaseModel):
    id: int
    name: str
    team: int
    description: str
    product_ids: list[int]
    image_ids: list[int]
    is_virtual: bool
    mode: str
    required_verifications: int

    @classmethod
    def of(cls, image_set: records.ImageSet, mode: records.AnnotationMode) -> "ImageSetOut":
        return cls(id=image_set.id, name=image_set.name, team=image_set.team_id,
                   description=image_set.description, product_ids=image_set.product_ids,
                   image_ids=image_set.image_ids, is_virtual=image_set.is_virtual,
                   mode=mode.mode, required_verifications=mode.required_verifications)


class TemplateOut(BaseModel):
    id: int
    name: str
    vector_kind: str
    color: str
    shortcut: str | None
    sort_order: int
    default_width: int | None
    default_height: int | None

    @classmethod
    def of(cls, template: records.AnnotationTemplate) -> "TemplateOut":
        return cls(id=template.id, name=template.name, vector_kind=template.vector_kind,
                   color=template.color, shortcut=template.shortcut,
                   sort_order=template.sort_order, default_width=template.default_width,
                   default_height=template.default_height)


class ProductOut(BaseModel):
    id: int
    name: str
    description: str
    template_ids: list[int]

    @classmethod
    def of(cls, product: records.Product) -> "ProductOut":
        return cls(id=product.id, name=product.name, description=product.description,
                   template_ids=product.template_ids)


class VerificationOut(BaseModel):
    user: int
    verdict: str
    timestamp: str


class AnnotationOut(BaseModel):
    id: int
    image: int
    template: int
    vector: dict
    creator: int
    last_editor: int
    created_at: str
    updated_at: str
    meta: dict
    deleted: bool
    verifications: list[VerificationOut]
    media_ids: list[int]

    @classmethod
    def of(cls, record: records.AnnotationRecord) -> "AnnotationOut":
        return cls(
            id=record.id, image=record.image_id, template=record.template_id,
            vector=record.vector, creator=record.creator_id, last_editor=record.last_editor_id,
            created_at=record.created_at, updated_at=record.updated_at, meta=record.meta,
            deleted=record.deleted,
            verifications=[VerificationOut(user=v.user_id, verdict=v.verdict,
                                           timestamp=v.timestamp) for v in record.verifications],
            media_ids=record.media_ids,
        )


class MediaOut(BaseModel):
    id: int
    annotation: int
    mime_type: str
    name: str

    @classmethod
    def of(cls, media: records.MediaAttachment) -> "MediaOut":
        return cls(id=media.id, annotation=media.annotation_id, mime_type=media.mime_type,
                   name=media.name)


class VersionOut(BaseModel):
    id: int
    image_set: int
    name: str
    description: str
    created_at: str
    image_list: list[int]
    annotation_count: int
    artifact_ids: list[int]

    @classmethod
    def of(cls, version: records.Version) -> "VersionOut":
        return cls(id=version.id, image_set=version.image_set_id, name=version.name,
                   description=version.description, created_at=version.created_at,
                   image_list=version.image_list, annotation_count=len(version.snapshot),
                   artifact_ids=version.artifact_ids)


class ArtifactOut(BaseModel):
    id: int
    version: int
    name: str
    mime_type: str

    @classmethod
    def of(cls, artifact: records.VersionArtifact) -> "ArtifactOut":
        return cls(id=artifact.id, version=artifact.version_id, name=artifact.name,
                   mime_type=artifact.mime_type)


class ScreeningOut(BaseModel):
    id: int
    image: int
    patch_w: int
    patch_h: int
    cols: int
    rows: int
    screened: str  # base64 bitset, row-major, LSB-first
    current: tuple[int, int]
    progress: float
    xs: list[int]  # column origins
    ys: list[int]  # row origins

    @classmethod
    def of(cls, smap: records.ScreeningMap, grid) -> "ScreeningOut":
        return cls(
            id=smap.id, image=smap.image_id, patch_w=smap.patch_w, patch_h=smap.patch_h,
            cols=smap.cols, rows=smap.rows,
            screened=base64.b64encode(smap.screened).decode("ascii"),
            current=smap.current, progress=ScreeningService.progress(smap),
            xs=list(grid.xs), ys=list(grid.ys),
        )


class RegistryEntryOut(BaseModel):
    cell: tuple[int, int, int, int]
    col: int
    row: int
    source_image_id: int
    source_annotation_id: int


class RegistryOut(BaseModel):
    map_image_id: int
    map_kind: str
    cell_size: int
    entries: list[RegistryEntryOut]


class RemoteRefOut(BaseModel):
    instance_base_url: str
    remote_public_name: str
    width: int
    height: int
    scoped_token: str


# --- request bodies ---

class ImageSetIn(BaseModel):
    name: str
    team: int
    description: str = ""
    is_virtual: bool = False


class ModeIn(BaseModel):
    mode: str
    required_verifications: int = 1


class AttachProductIn(BaseModel):
    product: int


class AnnotationIn(BaseModel):
    image: int
    template: int
    vector: dict
    meta: dict = Field(default_factory=dict)


class AnnotationPatch(BaseModel):
    vector: dict | None = None
    template: int | None = None
    meta: dict | None = None


class SingleClickIn(BaseModel):
    image: int
    template: int
    x: float
    y: float
    meta: dict = Field(default_factory=dict)


class VerdictIn(BaseModel):
    verdict: str


class TemplateIn(BaseModel):
    name: str
    vector_kind: str
    color: str = "#ff0000"
    shortcut: str | None = None
    sort_order: int = 0
    default_width: int | None = None
    default_height: int | None = None


class ProductIn(BaseModel):
    name: str
    description: str = ""


class ProductTemplateIn(BaseModel):
    template: int


class TeamIn(BaseModel):
    name: str


class MembershipIn(BaseModel):
    user: int
    rights: list[str]


class VersionIn(BaseModel):
    image_set: int
    name: str
    description: str = ""


class ScreeningIn(BaseModel):
    image: int
    patch_w: int
    patch_h: int


class CellIn(BaseModel):
    col: int
    row: int


class ClassGridIn(BaseModel):
    image_set: int
    template: int
    cell_size: int = 64


class DensityMapIn(BaseModel):
    image_set: int
    bin_width: float = 0.05
    cell_size: int = 64
    score_key: str = "score"
    template: int | None = None


class ClusterPatchIn(BaseModel):
    annotation: int
    u: float
    v: float


class ClusterMapIn(BaseModel):
    image_set: int
    canvas_w: int
    canvas_h: int
    cell_size: int = 64
    patches: list[ClusterPatchIn]


class CorrectionIn(BaseModel):
    col: int
    row: int
    new_template: int | None = None
    delete: bool = False
    verify: str | None = None


class ShareIn(BaseModel):
    image: int
    peer: str


class RevokeIn(BaseModel):
    token: str


class RemoteRefIn(BaseModel):
    instance_base_url: str
    remote_public_name: str
    width: int
    height: int
    scoped_token: str


class ImportIn(BaseModel):
    peer_base_url: str
    peer_token: str
    remote_image_set: int
    target_image_set: int
