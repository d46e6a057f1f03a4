"""HTTP surface and admin CLI."""

from slidehub.gateway.app import create_app
from slidehub.gateway.config import Settings, load_settings

__all__ = ["create_app", "Settings", "load_settings"]
