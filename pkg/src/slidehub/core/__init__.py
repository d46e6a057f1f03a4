"""Domain types, annotation-vector schema, and name pseudonymization."""

from slidehub.core.naming import fnv1a_32, pseudonymize_name, PUBLIC_NAME_RE
from slidehub.core.vectors import (
    VECTOR_KINDS,
    canonical_coords,
    single_click_vector,
    validate_vector,
    vector_bbox,
    vector_json,
)

__all__ = [
    "VECTOR_KINDS",
    "PUBLIC_NAME_RE",
    "canonical_coords",
    "fnv1a_32",
    "pseudonymize_name",
    "single_click_vector",
    "validate_vector",
    "vector_bbox",
    "vector_json",
]
