"""Persistent per-user screening grids with 15%-overlap patches."""

from slidehub.screening.grid import GridSpec, compute_grid
from slidehub.screening.service import ScreeningService

__all__ = ["GridSpec", "compute_grid", "ScreeningService"]
