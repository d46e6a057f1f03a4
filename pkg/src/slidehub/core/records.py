"""Value types shared across the stores and the gateway.

These are plain immutable-ish snapshots of database rows.  ``private_name``
on ImageRecord is server-internal: API serializers and export templates
must never emit it.
"""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass
class User:
    id: int
    username: str
    active: bool = True
    anonymized: bool = False
    is_admin: bool = False


@dataclass
class TeamMembership:
    user_id: int
    team_id: int
    rights: frozenset  # subset of RIGHTS


RIGHTS = frozenset({"create", "read", "update", "delete", "verify", "manage"})

ANNOTATION_MODES = ("cooperative", "blind", "second_opinion")


@dataclass
class AnnotationMode:
    image_set_id: int
    mode: str = "cooperative"
    required_verifications: int = 1  # second_opinion only


@dataclass
class ImageRecord:
    id: int
    private_name: str  # never serialized
    public_name: str
    width: int
    height: int
    frame_count: int
    image_set_id: int
    owner_instance: str | None = None  # federation origin, None = local


@dataclass
class ImageSet:
    id: int
    name: str
    team_id: int
    description: str = ""
    product_ids: list = field(default_factory=list)
    image_ids: list = field(default_factory=list)
    is_virtual: bool = False


@dataclass
class AnnotationTemplate:
    id: int
    name: str
    vector_kind: str
    color: str = "#ff0000"
    shortcut: str | None = None
    sort_order: int = 0
    default_width: int | None = None
    default_height: int | None = None
    example_image_ref: str | None = None


@dataclass
class Product:
    id: int
    name: str
    description: str = ""
    template_ids: list = field(default_factory=list)


@dataclass
class Verification:
    user_id: int
    verdict: str  # accept | reject
    timestamp: str


@dataclass
class AnnotationRecord:
    id: int
    image_id: int
    template_id: int
    vector: dict  # canonical coords object
    creator_id: int
    last_editor_id: int
    created_at: str
    updated_at: str
    meta: dict = field(default_factory=dict)
    deleted: bool = False
    verifications: list = field(default_factory=list)
    media_ids: list = field(default_factory=list)
    origin_instance: str | None = None
    origin_id: int | None = None


@dataclass
class MediaAttachment:
    id: int
    annotation_id: int
    mime_type: str
    name: str
    bytes_ref: str  # storage-relative path


@dataclass
class Version:
    id: int
    image_set_id: int
    name: str
    description: str
    created_at: str
    image_list: list
    snapshot: list  # frozen annotation states (dicts)
    artifact_ids: list = field(default_factory=list)


@dataclass
class VersionArtifact:
    id: int
    version_id: int
    name: str
    mime_type: str
    bytes_ref: str


@dataclass
class ScreeningMap:
    id: int
    image_id: int
    user_id: int
    patch_w: int
    patch_h: int
    cols: int
    rows: int
    screened: bytes  # packed bitset, row-major, LSB-first
    current: tuple  # (col, row)
    created_at: str


@dataclass
class RemoteImageRef:
    instance_base_url: str
    remote_public_name: str
    width: int
    height: int
    scoped_token: str
