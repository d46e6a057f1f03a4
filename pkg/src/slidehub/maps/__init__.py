"""Synthetic navigable layout maps built from annotation crops."""

from slidehub.maps.layout import (
    LayoutMapService,
    MapRegistry,
    RegistryEntry,
    cluster_cells,
    density_bin,
    grid_columns,
)

__all__ = [
    "LayoutMapService",
    "MapRegistry",
    "RegistryEntry",
    "cluster_cells",
    "density_bin",
    "grid_columns",
]
