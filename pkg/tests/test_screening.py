"""Screening grids: coverage/overlap oracles, marks, resume persistence."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slidehub import errors
from slidehub.hub import Hub
from slidehub.screening import compute_grid
from slidehub.screening.service import bit_count, bit_get


def coverage_and_overlap_oracle(grid):
    """Brute force: every pixel covered; adjacent overlaps >= 15% of patch."""
    covered = np.zeros((grid.image_h, grid.image_w), dtype=bool)
    for _, (x, y) in grid.origins():
        assert 0 <= x and 0 <= y
        assert x + grid.patch_w <= grid.image_w and y + grid.patch_h <= grid.image_h
        covered[y : y + grid.patch_h, x : x + grid.patch_w] = True
    assert covered.all(), "uncovered pixels remain"
    for axis, patch in ((grid.xs, grid.patch_w), (grid.ys, grid.patch_h)):
        for a, b in zip(axis, axis[1:]):
            assert b > a, "origins must increase"
            overlap = a + patch - b
            assert overlap >= math.ceil(0.15 * patch) - 1
            if patch >= 2:
                assert overlap >= 0.15 * patch


class TestComputeGrid:
    def test_worked_example_1000x800_200(self):
        grid = compute_grid(1000, 800, 200, 200)
        assert list(grid.xs) == [0, 170, 340, 510, 680, 800]  # last clamped from 850
        assert list(grid.ys) == [0, 170, 340, 510, 600]  # last clamped from 680
        assert (grid.cols, grid.rows) == (6, 5)
        coverage_and_overlap_oracle(grid)
        # adjacent overlap of this case is >= 30px
        for axis in (grid.xs, grid.ys):
            for a, b in zip(axis, axis[1:]):
                assert a + 200 - b >= 30

    def test_patch_equal_to_image(self):
        grid = compute_grid(200, 200, 200, 200)
        assert list(grid.xs) == [0] and list(grid.ys) == [0]

    def test_one_pixel_wider(self):
        grid = compute_grid(201, 200, 200, 200)
        assert list(grid.xs) == [0, 1]
        assert 200 - 1 >= 30  # clamped overlap 199 still satisfies the invariant
        coverage_and_overlap_oracle(grid)

    def test_patch_larger_than_image(self):
        with pytest.raises(errors.PatchLargerThanImage):
            compute_grid(100, 100, 200, 100)

    @settings(max_examples=60, deadline=None)
    @given(
        st.integers(1, 2048), st.integers(1, 2048),
        st.integers(2, 600), st.integers(2, 600),
    )
    def test_randomized_coverage_property(self, image_w, image_h, patch_w, patch_h):
        patch_w, patch_h = min(patch_w, image_w), min(patch_h, image_h)
        coverage_and_overlap_oracle(compute_grid(image_w, image_h, patch_w, patch_h))

    def test_cell_out_of_range(self):
        grid = compute_grid(1000, 800, 200, 200)
        with pytest.raises(errors.CellOutOfRange):
            grid.origin(9, 9)


@pytest.fixture
def screening(seeded):
    return seeded.hub.screening


class TestScreeningMaps:
    def register(self, seeded, user=None, patch=(200, 200)):
        user = user or seeded.alice
        return seeded.hub.screening.register_map(user, seeded.image.id, *patch)

    def test_register_shapes_grid(self, seeded, screening):
        smap = self.register(seeded)
        assert (smap.cols, smap.rows) == (6, 5)
        assert screening.progress(smap) == 0.0
        assert smap.current == (0, 0)

    def test_mark_progress_fraction(self, seeded, screening):
        smap = self.register(seeded)
        _, progress = screening.mark_screened(seeded.alice, smap.id, 0, 0)
        assert progress == pytest.approx(1 / 30)

    def test_mark_idempotent(self, seeded, screening):
        smap = self.register(seeded)
        screening.mark_screened(seeded.alice, smap.id, 2, 3)
        _, progress = screening.mark_screened(seeded.alice, smap.id, 2, 3)
        assert progress == pytest.approx(1 / 30)

    def test_mark_out_of_range(self, seeded, screening):
        smap = self.register(seeded)
        with pytest.raises(errors.CellOutOfRange):
            screening.mark_screened(seeded.alice, smap.id, 9, 9)

    def test_position_survives_restart(self, seeded, tmp_path):
        smap = self.register(seeded)
        seeded.hub.screening.record_position(seeded.alice, smap.id, 3, 2)
        # reopen the same database: a fresh service must see the position
        reopened = Hub(seeded.hub.db.path, seeded.hub.storage_root)
        try:
            state = reopened.screening.resume(seeded.alice, smap.id)
            assert state["map"].current == (3, 2)
            assert state["current_rect"] == (510, 340, 710, 540)
        finally:
            reopened.close()

    def test_fresh_map_resumes_at_origin(self, seeded, screening):
        smap = self.register(seeded)
        assert screening.resume(seeded.alice, smap.id)["map"].current == (0, 0)

    def test_mark_does_not_move_position(self, seeded, screening):
        smap = self.register(seeded)
        screening.record_position(seeded.alice, smap.id, 1, 1)
        screening.mark_screened(seeded.alice, smap.id, 4, 4)
        assert screening.get_map(seeded.alice, smap.id).current == (1, 1)

    def test_missing_map(self, seeded, screening):
        with pytest.raises(errors.NotFound):
            screening.resume(seeded.alice, 999)

    def test_per_user_isolation(self, seeded, screening):
        alice_map = self.register(seeded, seeded.alice)
        bob_map = self.register(seeded, seeded.bob)
        assert alice_map.id != bob_map.id
        screening.mark_screened(seeded.alice, alice_map.id, 0, 0)
        assert screening.progress(screening.get_map(seeded.bob, bob_map.id)) == 0.0
        with pytest.raises(errors.PermissionDenied):
            screening.mark_screened(seeded.bob, alice_map.id, 0, 0)

    def test_full_progress(self, seeded, screening):
        smap = self.register(seeded, patch=(600, 500))
        for row in range(smap.rows):
            for col in range(smap.cols):
                _, progress = screening.mark_screened(seeded.alice, smap.id, col, row)
        assert progress == 1.0

    def test_reregister_same_size_resumes(self, seeded, screening):
        smap = self.register(seeded)
        screening.mark_screened(seeded.alice, smap.id, 0, 0)
        again = self.register(seeded)
        assert again.id == smap.id
        assert bit_count(again.screened) == 1

    def test_reregister_new_size_resets(self, seeded, screening):
        smap = self.register(seeded)
        screening.mark_screened(seeded.alice, smap.id, 0, 0)
        fresh = self.register(seeded, patch=(300, 300))
        assert fresh.id != smap.id
        assert bit_count(fresh.screened) == 0

    def test_bitset_layout(self, seeded, screening):
        smap = self.register(seeded)
        screening.mark_screened(seeded.alice, smap.id, 2, 1)  # index 1*6+2 = 8
        updated = screening.get_map(seeded.alice, smap.id)
        assert bit_get(updated.screened, 8)
        assert not bit_get(updated.screened, 7)
