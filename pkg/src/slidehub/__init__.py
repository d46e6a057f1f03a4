"""Collaborative annotation server for gigapixel images.

Tile-pyramid image serving, versioned annotation storage, team-based
access control, screening and layout-map tooling, and multi-instance
federation behind a paginated REST API and an admin CLI.
"""

__version__ = "0.1.0"
