"""Users, teams, per-action rights, and crowd-annotation visibility modes."""

from slidehub.access.service import AccessService

__all__ = ["AccessService"]
