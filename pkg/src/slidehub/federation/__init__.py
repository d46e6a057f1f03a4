"""Multi-instance federation: annotations centralize, pixels stay home."""

from slidehub.federation.service import FederationService, default_peer_client

__all__ = ["FederationService", "default_peer_client"]
