"""SQLite-backed stores for images, catalog, annotations, and versions."""

from slidehub.store.db import Database

__all__ = ["Database"]
