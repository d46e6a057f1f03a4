"""Deep-zoom pyramid building and tile serving."""

from slidehub.tiles.pyramid import (
    TILE_SIZE,
    Pyramid,
    TileEngine,
    decode_image_bytes,
    grid_shape,
    level_dimensions,
    pyramid_max_level,
)

__all__ = [
    "TILE_SIZE",
    "Pyramid",
    "TileEngine",
    "decode_image_bytes",
    "grid_shape",
    "level_dimensions",
    "pyramid_max_level",
]
