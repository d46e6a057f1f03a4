"""Annotation vector schema: validation, canonical JSON, single-click boxes.

A vector is a flat JSON object of pixel coordinates keyed ``x1, y1, x2,
y2, ...`` so individual coordinates stay queryable in SQL.  Five kinds
exist: ``box``, ``polygon``, ``line``, ``circle`` (stored as its bounding
box) and ``global`` (empty object, image-level label).
"""

from __future__ import annotations

import json
import math
import re

from slidehub import errors

VECTOR_KINDS = ("box", "polygon", "line", "circle", "global")

_RECT_KINDS = ("box", "circle")
_PAIR_KEY_RE = re.compile(r"^([xy])([1-9]\d*)$")

Coords = dict


def _coordinate_pairs(coords: dict) -> list[tuple]:
    """Split a coords object into ((x1, y1), (x2, y2), ...).

    Raises MalformedKeys unless the keys are exactly x1..xn / y1..yn with
    finite-checkable numeric values (bools rejected).
    """
    xs: dict[int, float] = {}
    ys: dict[int, float] = {}
    for key, value in coords.items():
        match = _PAIR_KEY_RE.match(key) if isinstance(key, str) else None
        if match is None:
            raise errors.MalformedKeys(f"unexpected coordinate key {key!r}")
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise errors.MalformedKeys(f"coordinate {key} is not a number")
        axis, index = match.group(1), int(match.group(2))
        (xs if axis == "x" else ys)[index] = value
    n = max(len(xs), len(ys))
    if sorted(xs) != list(range(1, n + 1)) or sorted(ys) != list(range(1, n + 1)):
        raise errors.MalformedKeys("coordinate keys must pair up as x1..xn / y1..yn")
    return [(xs[i], ys[i]) for i in range(1, n + 1)]


def validate_vector(kind: str, coords: dict, image_w: int, image_h: int) -> None:
    """Check a parsed coords object against the schema for ``kind``.

    Raises MalformedKeys, DegenerateGeometry or OutOfBounds; returns None
    when every invariant holds.  Bounds are inclusive: coordinates may
    touch the image edge ([0, w] x [0, h] in level-0 pixel space).
    """
    if kind not in VECTOR_KINDS:
        raise errors.MalformedKeys(f"unknown vector kind {kind!r}")
    if not isinstance(coords, dict):
        raise errors.MalformedKeys("vector must be a JSON object")

    if kind == "global":
        if coords:
            raise errors.MalformedKeys("global annotations carry no coordinates")
        return

    pairs = _coordinate_pairs(coords)
    if kind == "polygon":
        if len(pairs) < 3:
            raise errors.DegenerateGeometry("polygon needs at least 3 vertices")
    elif len(pairs) != 2:
        raise errors.MalformedKeys(f"{kind} vector needs exactly x1,y1,x2,y2")

    for x, y in pairs:
        if not (math.isfinite(x) and math.isfinite(y)):
            raise errors.OutOfBounds("coordinates must be finite")
        if not (0 <= x <= image_w and 0 <= y <= image_h):
            raise errors.OutOfBounds(
                f"({x}, {y}) outside image bounds {image_w}x{image_h}"
            )

    if kind in _RECT_KINDS:
        (x1, y1), (x2, y2) = pairs
        if not (x1 < x2 and y1 < y2):
            raise errors.DegenerateGeometry(f"{kind} requires x1<x2 and y1<y2")


def canonical_coords(coords: dict) -> dict:
    """Return coords with keys in canonical order x1,y1,x2,y2,...

    Key order is preserved by dict insertion order, so serializing the
    result is deterministic: serialize -> parse -> serialize round-trips
    byte-identically.
    """
    pairs = _coordinate_pairs(coords) if coords else []
    out: dict = {}
    for i, (x, y) in enumerate(pairs, start=1):
        out[f"x{i}"] = x
        out[f"y{i}"] = y
    return out


def vector_json(coords: dict) -> str:
    """Canonical compact JSON encoding of a coords object."""
    return json.dumps(canonical_coords(coords), separators=(",", ":"))


def vector_bbox(kind: str, coords: dict):
    """Axis-aligned bounding box (x1, y1, x2, y2) of a vector.

    Global annotations have no geometry; returns None for them.  Line and
    polygon coordinates are unordered, so min/max over the vertices.
    """
    if kind == "global" or not coords:
        return None
    pairs = _coordinate_pairs(coords)
    xs = [p[0] for p in pairs]
    ys = [p[1] for p in pairs]
    return (min(xs), min(ys), max(xs), max(ys))


def single_click_vector(
    kind: str,
    default_width,
    default_height,
    click_x,
    click_y,
    image_w: int,
    image_h: int,
) -> dict:
    """Place a template-sized box/circle centered on a click.

    The rectangle is shifted (not shrunk) to stay inside the image, so the
    template default size is preserved whenever it fits; defaults larger
    than the image collapse to the full image extent on that axis.
    """
    if kind not in _RECT_KINDS:
        raise errors.UnsupportedKind(f"single click needs a box or circle template, got {kind}")
    if default_width is None or default_height is None:
        raise errors.ValidationFailed("template has no default size")
    if not (0 <= click_x <= image_w and 0 <= click_y <= image_h):
        raise errors.OutOfBounds("click outside image")

    w = min(int(default_width), image_w)
    h = min(int(default_height), image_h)
    x1 = min(max(int(round(click_x)) - w // 2, 0), image_w - w)
    y1 = min(max(int(round(click_y)) - h // 2, 0), image_h - h)
    return {"x1": x1, "y1": y1, "x2": x1 + w, "y2": y1 + h}
