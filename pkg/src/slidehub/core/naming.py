"""Filename pseudonymization.

Uploaded files keep their original (private) name server-side only; every
external surface sees a public name of the form ``yymmdd-hhmm-<hex4>``
where the suffix is the low 16 bits of the 32-bit FNV-1a hash of the
private name.  The prefix is purely date-derived, so no substring of the
private name ever leaks.  Collisions are acceptable: the numeric id, not
the public name, is the key.
"""

from __future__ import annotations

import re
from datetime import datetime

PUBLIC_NAME_RE = re.compile(r"^\d{6}-\d{4}-[0-9a-f]{4}$")

_FNV_OFFSET_BASIS = 0x811C9DC5
_FNV_PRIME = 0x01000193


def fnv1a_32(data: bytes) -> int:
    """32-bit FNV-1a hash."""
    h = _FNV_OFFSET_BASIS
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & 0xFFFFFFFF
    return h


def pseudonymize_name(private_name: str, upload_time: datetime) -> str:
    """Public name for a private filename at a given upload wall-clock time.

    Deterministic for fixed inputs; two uploads of the same file in the
    same minute yield identical strings.
    """
    if not private_name:
        raise ValueError("private_name must be non-empty")
    suffix = fnv1a_32(private_name.encode("utf-8")) & 0xFFFF
    return f"{upload_time:%y%m%d-%H%M}-{suffix:04x}"
