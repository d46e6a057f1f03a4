"""Core model: vector schema, pseudonymization, single-click placement."""

import json
from datetime import datetime
from functools import reduce

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slidehub import errors
from slidehub.core import (
    PUBLIC_NAME_RE,
    canonical_coords,
    fnv1a_32,
    pseudonymize_name,
    single_click_vector,
    validate_vector,
    vector_bbox,
    vector_json,
)


# Independent oracle: FNV-1a 32-bit from its published constants.
def fnv1a_oracle(data: bytes) -> int:
    return reduce(lambda h, b: ((h ^ b) * 0x01000193) & 0xFFFFFFFF, data, 0x811C9DC5)


class TestValidateVector:
    def test_valid_box(self):
        validate_vector("box", {"x1": 10, "y1": 10, "x2": 50, "y2": 40}, 100, 100)

    def test_two_vertex_polygon_is_degenerate(self):
        with pytest.raises(errors.DegenerateGeometry):
            validate_vector("polygon", {"x1": 0, "y1": 0, "x2": 5, "y2": 0}, 100, 100)

    def test_box_beyond_width_is_out_of_bounds(self):
        with pytest.raises(errors.OutOfBounds):
            validate_vector("box", {"x1": 10, "y1": 10, "x2": 150, "y2": 40}, 100, 100)

    def test_inverted_box_is_degenerate(self):
        with pytest.raises(errors.DegenerateGeometry):
            validate_vector("box", {"x1": 50, "y1": 10, "x2": 10, "y2": 40}, 100, 100)

    def test_circle_uses_box_rules(self):
        validate_vector("circle", {"x1": 0, "y1": 0, "x2": 100, "y2": 100}, 100, 100)
        with pytest.raises(errors.DegenerateGeometry):
            validate_vector("circle", {"x1": 5, "y1": 5, "x2": 5, "y2": 9}, 100, 100)

    def test_line_needs_no_ordering(self):
        validate_vector("line", {"x1": 90, "y1": 80, "x2": 10, "y2": 5}, 100, 100)

    def test_global_must_be_empty(self):
        validate_vector("global", {}, 100, 100)
        with pytest.raises(errors.MalformedKeys):
            validate_vector("global", {"x1": 1, "y1": 1}, 100, 100)

    def test_missing_key_is_malformed(self):
        with pytest.raises(errors.MalformedKeys):
            validate_vector("box", {"x1": 1, "y1": 1, "x2": 5}, 100, 100)

    def test_stray_key_is_malformed(self):
        with pytest.raises(errors.MalformedKeys):
            validate_vector("box", {"x1": 1, "y1": 1, "x2": 5, "y2": 5, "z": 3}, 100, 100)

    def test_non_numeric_is_malformed(self):
        with pytest.raises(errors.MalformedKeys):
            validate_vector("box", {"x1": "1", "y1": 1, "x2": 5, "y2": 5}, 100, 100)
        with pytest.raises(errors.MalformedKeys):
            validate_vector("box", {"x1": True, "y1": 1, "x2": 5, "y2": 5}, 100, 100)

    def test_nan_is_out_of_bounds(self):
        with pytest.raises(errors.OutOfBounds):
            validate_vector("line", {"x1": float("nan"), "y1": 0, "x2": 1, "y2": 1}, 10, 10)

    def test_polygon_gap_in_indices_is_malformed(self):
        coords = {"x1": 0, "y1": 0, "x2": 5, "y2": 0, "x4": 5, "y4": 5}
        with pytest.raises(errors.MalformedKeys):
            validate_vector("polygon", coords, 100, 100)

    def test_edge_touching_is_allowed(self):
        validate_vector("box", {"x1": 0, "y1": 0, "x2": 100, "y2": 100}, 100, 100)


class TestCanonicalJson:
    def test_key_order(self):
        coords = {"y2": 40, "x1": 10, "y1": 10, "x2": 50}
        assert vector_json(coords) == '{"x1":10,"y1":10,"x2":50,"y2":40}'

    def test_global_serializes_empty(self):
        assert vector_json({}) == "{}"

    @settings(max_examples=60, deadline=None)
    @given(
        st.lists(
            st.tuples(
                st.one_of(st.integers(0, 4096), st.floats(0, 4096, allow_nan=False, width=32)),
                st.one_of(st.integers(0, 4096), st.floats(0, 4096, allow_nan=False, width=32)),
            ),
            min_size=1,
            max_size=12,
        )
    )
    def test_serialize_parse_serialize_is_byte_identical(self, points):
        coords = {}
        for i, (x, y) in enumerate(points, start=1):
            coords[f"y{i}"] = y  # deliberately insert y before x
            coords[f"x{i}"] = x
        first = vector_json(coords)
        again = vector_json(json.loads(first))
        assert first == again

    def test_bbox_of_polygon(self):
        coords = {"x1": 5, "y1": 40, "x2": 30, "y2": 2, "x3": 11, "y3": 19}
        assert vector_bbox("polygon", coords) == (5, 2, 30, 40)

    def test_bbox_of_global_is_none(self):
        assert vector_bbox("global", {}) is None

    def test_canonical_coords_reorders(self):
        assert list(canonical_coords({"y1": 2, "x1": 1})) == ["x1", "y1"]


class TestPseudonymizeName:
    def test_matches_fnv_oracle_literal(self):
        # fnv1a_oracle(b"slide_07.svs") == 0xc5bb698e, low 16 bits -> 698e
        assert fnv1a_oracle(b"slide_07.svs") == 0xC5BB698E
        out = pseudonymize_name("slide_07.svs", datetime(2021, 3, 15, 14, 2))
        assert out == "210315-1402-698e"

    def test_format(self):
        out = pseudonymize_name("a", datetime(2020, 1, 1, 0, 0))
        assert PUBLIC_NAME_RE.match(out)
        assert out.startswith("200101-0000-")
        assert out == "200101-0000-292c"

    def test_deterministic_within_minute(self):
        t = datetime(2022, 7, 9, 8, 30, 12)
        t2 = datetime(2022, 7, 9, 8, 30, 55)
        assert pseudonymize_name("x.png", t) == pseudonymize_name("x.png", t2)

    def test_empty_name_rejected(self):
        with pytest.raises(ValueError):
            pseudonymize_name("", datetime(2020, 1, 1))

    @settings(max_examples=100, deadline=None)
    @given(st.text(min_size=1, max_size=64), st.datetimes(datetime(2000, 1, 1), datetime(2099, 12, 31)))
    def test_oracle_equivalence_and_privacy(self, name, when):
        out = pseudonymize_name(name, when)
        assert PUBLIC_NAME_RE.match(out)
        assert fnv1a_32(name.encode("utf-8")) == fnv1a_oracle(name.encode("utf-8"))
        assert out.endswith(format(fnv1a_oracle(name.encode("utf-8")) & 0xFFFF, "04x"))
        # prefix is purely date-derived
        assert out[:12] == f"{when:%y%m%d-%H%M}-"


class TestSingleClick:
    def test_symmetric_centering(self):
        v = single_click_vector("box", 50, 50, 100, 100, 1000, 1000)
        assert v == {"x1": 75, "y1": 75, "x2": 125, "y2": 125}

    def test_clamped_to_origin(self):
        v = single_click_vector("box", 50, 50, 10, 10, 1000, 1000)
        assert v == {"x1": 0, "y1": 0, "x2": 50, "y2": 50}
        # clamp keeps the full default size inside the image
        assert v["x2"] - v["x1"] == 50 and v["y2"] - v["y1"] == 50

    def test_clamped_to_far_edge(self):
        v = single_click_vector("circle", 60, 40, 999, 999, 1000, 1000)
        assert v == {"x1": 940, "y1": 960, "x2": 1000, "y2": 1000}

    def test_unsupported_kinds(self):
        for kind in ("polygon", "line", "global"):
            with pytest.raises(errors.UnsupportedKind):
                single_click_vector(kind, 50, 50, 5, 5, 100, 100)

    def test_missing_default_size(self):
        with pytest.raises(errors.ValidationFailed):
            single_click_vector("box", None, 50, 5, 5, 100, 100)

    @settings(max_examples=120, deadline=None)
    @given(
        st.integers(1, 80),
        st.integers(1, 80),
        st.integers(0, 200),
        st.integers(0, 200),
        st.integers(1, 200),
        st.integers(1, 200),
    )
    def test_output_always_validates(self, dw, dh, cx, cy, w, h):
        cx, cy = min(cx, w), min(cy, h)
        v = single_click_vector("box", dw, dh, cx, cy, w, h)
        validate_vector("box", v, w, h)
        if dw <= w and dh <= h:
            assert v["x2"] - v["x1"] == dw
            assert v["y2"] - v["y1"] == dh
