"""Service wiring: one Hub per instance (database + storage root)."""

from __future__ import annotations

from pathlib import Path

from slidehub.access import AccessService
from slidehub.maps import LayoutMapService
from slidehub.screening import ScreeningService
from slidehub.store.annotations import AnnotationStore
from slidehub.store.catalog import Catalog
from slidehub.store.db import Database
from slidehub.store.images import ImageStore
from slidehub.tiles import TileEngine


class Hub:
    """Everything one instance needs, sharing a database and storage root."""

    def __init__(self, db_path, storage_root, base_url: str = "http://127.0.0.1:8000",
                 peer_client_factory=None):
        from slidehub.federation import FederationService

        self.storage_root = Path(storage_root)
        self.storage_root.mkdir(parents=True, exist_ok=True)
        self.db = Database(db_path)
        self.engine = TileEngine(self.storage_root)
        self.access = AccessService(self.db)
        self.catalog = Catalog(self.db, self.access)
        self.images = ImageStore(self.db, self.access, self.engine, self.storage_root)
        self.annotations = AnnotationStore(
            self.db, self.access, self.images, self.catalog, self.storage_root
        )
        self.screening = ScreeningService(self.db, self.access, self.images)
        self.maps = LayoutMapService(
            self.db, self.access, self.images, self.annotations, self.catalog,
            self.engine, self.storage_root,
        )
        self.federation = FederationService(self, base_url, peer_client_factory)

    def close(self) -> None:
        self.db.close()
