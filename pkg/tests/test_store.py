"""Annotation store: CRUD, verification, versions, export, window queries."""

import json

import pytest

from slidehub import errors
from tests.conftest import box_at


class TestCreate:
    def test_valid_box(self, seeded):
        record = seeded.hub.annotations.create_annotation(
            seeded.alice, seeded.image.id, seeded.box_template.id, box_at(10, 10)
        )
        assert record.deleted is False
        assert record.verifications == []
        assert record.creator_id == record.last_editor_id == seeded.alice.id

    def test_template_not_in_product(self, seeded):
        stray = seeded.hub.catalog.create_template("stray", "box")
        with pytest.raises(errors.TemplateNotInProduct):
            seeded.hub.annotations.create_annotation(
                seeded.alice, seeded.image.id, stray.id, box_at(10, 10)
            )

    def test_out_of_bounds_vector(self, seeded):
        with pytest.raises(errors.ValidationFailed):
            seeded.hub.annotations.create_annotation(
                seeded.alice, seeded.image.id, seeded.box_template.id,
                {"x1": 10, "y1": 10, "x2": 5000, "y2": 40},
            )

    def test_kind_must_match_template(self, seeded):
        with pytest.raises(errors.ValidationFailed):
            seeded.hub.annotations.create_annotation(
                seeded.alice, seeded.image.id, seeded.polygon_template.id, box_at(10, 10)
            )

    def test_reader_cannot_create(self, seeded):
        with pytest.raises(errors.PermissionDenied):
            seeded.hub.annotations.create_annotation(
                seeded.carol, seeded.image.id, seeded.box_template.id, box_at(10, 10)
            )


class TestUpdateDelete:
    def test_move_box_keeps_creator(self, seeded):
        store = seeded.hub.annotations
        record = store.create_annotation(seeded.alice, seeded.image.id, seeded.box_template.id, box_at(10, 10))
        moved = store.update_annotation(seeded.bob, record.id, new_vector=box_at(15, 15))
        assert moved.creator_id == seeded.alice.id
        assert moved.last_editor_id == seeded.bob.id
        assert moved.vector["x1"] == 15
        assert moved.updated_at >= record.updated_at

    def test_update_after_version_keeps_snapshot(self, seeded):
        store = seeded.hub.annotations
        record = store.create_annotation(seeded.alice, seeded.image.id, seeded.box_template.id, box_at(10, 10))
        v1 = store.create_version(seeded.alice, seeded.set_id, "v1")
        store.update_annotation(seeded.alice, record.id, new_vector=box_at(500, 500))
        snap = store.get_version(v1.id).snapshot
        assert json.loads(snap[0]["vector"])["x1"] == 10

    def test_update_deleted_raises(self, seeded):
        store = seeded.hub.annotations
        record = store.create_annotation(seeded.alice, seeded.image.id, seeded.box_template.id, box_at(10, 10))
        store.delete_annotation(seeded.alice, record.id)
        with pytest.raises(errors.Deleted):
            store.update_annotation(seeded.alice, record.id, new_vector=box_at(15, 15))

    def test_delete_hides_from_default_query(self, seeded):
        store = seeded.hub.annotations
        record = store.create_annotation(seeded.alice, seeded.image.id, seeded.box_template.id, box_at(10, 10))
        store.delete_annotation(seeded.alice, record.id)
        records, total = store.query_annotations(seeded.alice, {"image_id": seeded.image.id})
        assert total == 0 and records == []

    def test_double_delete_idempotent(self, seeded):
        store = seeded.hub.annotations
        record = store.create_annotation(seeded.alice, seeded.image.id, seeded.box_template.id, box_at(10, 10))
        first = store.delete_annotation(seeded.alice, record.id)
        second = store.delete_annotation(seeded.alice, record.id)
        assert first.deleted and second.deleted
        assert first.updated_at == second.updated_at


class TestVerify:
    def test_latest_verdict_wins(self, seeded):
        store = seeded.hub.annotations
        record = store.create_annotation(seeded.alice, seeded.image.id, seeded.box_template.id, box_at(10, 10))
        store.verify_annotation(seeded.alice, record.id, "accept")
        verdicts = store.verify_annotation(seeded.alice, record.id, "reject")
        assert [(v.user_id, v.verdict) for v in verdicts] == [(seeded.alice.id, "reject")]

    def test_two_users_two_entries(self, seeded):
        store = seeded.hub.annotations
        record = store.create_annotation(seeded.alice, seeded.image.id, seeded.box_template.id, box_at(10, 10))
        store.verify_annotation(seeded.alice, record.id, "accept")
        verdicts = store.verify_annotation(seeded.bob, record.id, "accept")
        assert len(verdicts) == 2

    def test_without_verify_right(self, seeded):
        store = seeded.hub.annotations
        record = store.create_annotation(seeded.alice, seeded.image.id, seeded.box_template.id, box_at(10, 10))
        with pytest.raises(errors.PermissionDenied):
            store.verify_annotation(seeded.carol, record.id, "accept")


class TestVersions:
    def test_snapshot_counts(self, seeded):
        store = seeded.hub.annotations
        for i in range(5):
            store.create_annotation(seeded.alice, seeded.image.id, seeded.box_template.id, box_at(10 + 30 * i, 10))
        v1 = store.create_version(seeded.alice, seeded.set_id, "v1")
        assert len(v1.snapshot) == 5
        for i in range(3):
            store.create_annotation(seeded.alice, seeded.image.id, seeded.box_template.id, box_at(10 + 30 * i, 100))
        v2 = store.create_version(seeded.alice, seeded.set_id, "v2")
        assert len(v2.snapshot) - len(v1.snapshot) == 3

    def test_empty_set_version(self, tmp_path, seeded):
        store = seeded.hub.annotations
        empty = seeded.hub.images.create_image_set(seeded.alice, "empty", seeded.team_id)
        version = store.create_version(seeded.alice, empty.id, "v0")
        assert version.snapshot == [] and version.image_list == []

    def test_deleted_record_stays_in_earlier_version(self, seeded):
        store = seeded.hub.annotations
        record = store.create_annotation(seeded.alice, seeded.image.id, seeded.box_template.id, box_at(10, 10))
        v1 = store.create_version(seeded.alice, seeded.set_id, "v1")
        store.delete_annotation(seeded.alice, record.id)
        export = store.export_annotations(seeded.alice, seeded.set_id, version_id=v1.id)
        assert export.count("\n") == 1
        live = store.export_annotations(seeded.alice, seeded.set_id)
        assert live == ""

    def test_requires_manage(self, seeded):
        with pytest.raises(errors.PermissionDenied):
            seeded.hub.annotations.create_version(seeded.bob, seeded.set_id, "nope")


class TestArtifacts:
    def test_attach_and_fetch(self, seeded):
        store = seeded.hub.annotations
        version = store.create_version(seeded.alice, seeded.set_id, "v1")
        artifact = store.attach_artifact(seeded.alice, version.id, "metrics.json",
                                         "application/json", b'{"f1": 0.93}')
        assert store.artifact_path(artifact.id).read_bytes() == b'{"f1": 0.93}'
        assert store.get_version(version.id).artifact_ids == [artifact.id]

    def test_missing_version(self, seeded):
        with pytest.raises(errors.NotFound):
            seeded.hub.annotations.attach_artifact(seeded.alice, 999, "x", "text/plain", b"")

    def test_attach_twice_two_artifacts(self, seeded):
        store = seeded.hub.annotations
        version = store.create_version(seeded.alice, seeded.set_id, "v1")
        a1 = store.attach_artifact(seeded.alice, version.id, "model.bin", "application/octet-stream", b"1")
        a2 = store.attach_artifact(seeded.alice, version.id, "model.bin", "application/octet-stream", b"2")
        assert a1.id != a2.id
        assert store.get_version(version.id).artifact_ids == [a1.id, a2.id]

    def test_snapshot_untouched_by_artifact(self, seeded):
        store = seeded.hub.annotations
        store.create_annotation(seeded.alice, seeded.image.id, seeded.box_template.id, box_at(10, 10))
        version = store.create_version(seeded.alice, seeded.set_id, "v1")
        before = store.export_annotations(seeded.alice, seeded.set_id, version_id=version.id)
        store.attach_artifact(seeded.alice, version.id, "notes.txt", "text/plain", b"hi")
        assert store.export_annotations(seeded.alice, seeded.set_id, version_id=version.id) == before


class TestExport:
    def test_csv_lines(self, seeded):
        store = seeded.hub.annotations
        store.create_annotation(seeded.alice, seeded.image.id, seeded.box_template.id, box_at(10, 10))
        store.create_annotation(seeded.alice, seeded.image.id, seeded.box_template.id, box_at(40, 40))
        out = store.export_annotations(
            seeded.alice, seeded.set_id, template="{public_name},{template_name},{vector}"
        )
        lines = out.splitlines()
        assert len(lines) == 2
        assert all(line.startswith(seeded.image.public_name + ",cell,") for line in lines)
        assert '"x1":10' in lines[0]

    def test_private_name_placeholder_rejected(self, seeded):
        with pytest.raises(errors.UnknownPlaceholder):
            seeded.hub.annotations.export_annotations(
                seeded.alice, seeded.set_id, template="{private_name}"
            )

    def test_unknown_placeholder_rejected(self, seeded):
        with pytest.raises(errors.UnknownPlaceholder):
            seeded.hub.annotations.export_annotations(
                seeded.alice, seeded.set_id, template="{nope},{vector}"
            )

    def test_version_export_reflects_snapshot(self, seeded):
        store = seeded.hub.annotations
        record = store.create_annotation(seeded.alice, seeded.image.id, seeded.box_template.id, box_at(10, 10))
        version = store.create_version(seeded.alice, seeded.set_id, "v1")
        snap_export = store.export_annotations(seeded.alice, seeded.set_id, version_id=version.id,
                                               template="{vector}")
        store.update_annotation(seeded.alice, record.id, new_vector=box_at(600, 600))
        assert store.export_annotations(seeded.alice, seeded.set_id, version_id=version.id,
                                        template="{vector}") == snap_export
        live = store.export_annotations(seeded.alice, seeded.set_id, template="{vector}")
        assert '"x1":600' in live

    def test_export_never_contains_private_name(self, seeded):
        store = seeded.hub.annotations
        store.create_annotation(seeded.alice, seeded.image.id, seeded.box_template.id, box_at(10, 10))
        out = store.export_annotations(
            seeded.alice, seeded.set_id,
            template="{public_name} {template_name} {vector} {creator} {updated_at}",
        )
        assert "scan_A" not in out


class TestQuery:
    def seed_annotations(self, seeded, n=25):
        store = seeded.hub.annotations
        return [
            store.create_annotation(seeded.alice, seeded.image.id, seeded.box_template.id,
                                    box_at(10 + (i % 30) * 30, 10 + (i // 30) * 30))
            for i in range(n)
        ]

    def test_pages_partition_results(self, seeded):
        self.seed_annotations(seeded, 25)
        store = seeded.hub.annotations
        pages, seen = [], []
        for offset in (0, 10, 20):
            records, total = store.query_annotations(seeded.alice, {}, limit=10, offset=offset)
            assert total == 25
            pages.append(len(records))
            seen.extend(r.id for r in records)
        assert pages == [10, 10, 5]
        full, _ = store.query_annotations(seeded.alice, {}, limit=100)
        assert seen == [r.id for r in full]
        assert len(set(seen)) == 25

    def test_window_equal_to_image_matches_all(self, seeded):
        self.seed_annotations(seeded, 10)
        store = seeded.hub.annotations
        _, with_window = store.query_annotations(
            seeded.alice, {"window": (0, 0, 1000, 800)}, limit=100
        )
        _, without = store.query_annotations(seeded.alice, {}, limit=100)
        assert with_window == without == 10

    def test_window_excludes_disjoint_box(self, seeded):
        store = seeded.hub.annotations
        store.create_annotation(seeded.alice, seeded.image.id, seeded.box_template.id,
                                {"x1": 20, "y1": 20, "x2": 40, "y2": 40})
        _, total = store.query_annotations(seeded.alice, {"window": (0, 0, 10, 10)}, limit=10)
        assert total == 0

    def test_window_brute_force_oracle(self, seeded):
        """Bounding-box intersection oracle over every stored vector."""
        store = seeded.hub.annotations
        records = self.seed_annotations(seeded, 40)
        window = (100.0, 50.0, 400.0, 300.0)

        def intersects(vec):
            wx1, wy1, wx2, wy2 = window
            return vec["x1"] <= wx2 and vec["x2"] >= wx1 and vec["y1"] <= wy2 and vec["y2"] >= wy1

        expected = sorted(r.id for r in records if intersects(r.vector))
        got, total = store.query_annotations(seeded.alice, {"window": window}, limit=1000)
        assert sorted(r.id for r in got) == expected
        assert total == len(expected)

    def test_global_annotation_matches_any_window(self, seeded):
        store = seeded.hub.annotations
        store.create_annotation(seeded.alice, seeded.image.id, seeded.global_template.id, {})
        _, total = store.query_annotations(seeded.alice, {"window": (0, 0, 5, 5)}, limit=10)
        assert total == 1

    def test_verified_filter(self, seeded):
        store = seeded.hub.annotations
        records = self.seed_annotations(seeded, 4)
        store.verify_annotation(seeded.bob, records[0].id, "accept")
        store.verify_annotation(seeded.bob, records[1].id, "reject")
        got, _ = store.query_annotations(seeded.alice, {"verified": True}, limit=10)
        assert [r.id for r in got] == [records[0].id]
        got, _ = store.query_annotations(seeded.alice, {"verified": False}, limit=10)
        assert records[1].id in [r.id for r in got]

    def test_bad_filter(self, seeded):
        store = seeded.hub.annotations
        with pytest.raises(errors.BadFilter):
            store.query_annotations(seeded.alice, {"bogus": 1})
        with pytest.raises(errors.BadFilter):
            store.query_annotations(seeded.alice, {}, limit=0)
        with pytest.raises(errors.BadFilter):
            store.query_annotations(seeded.alice, {"window": (1, 2, 3)})

    def test_audit_monotonic_and_creator_write_once(self, seeded):
        store = seeded.hub.annotations
        record = store.create_annotation(seeded.alice, seeded.image.id, seeded.box_template.id, box_at(10, 10))
        stamps = [record.updated_at]
        for i in range(3):
            record = store.update_annotation(seeded.bob, record.id, new_vector=box_at(20 + i, 20))
            stamps.append(record.updated_at)
        assert stamps == sorted(stamps)
        assert record.creator_id == seeded.alice.id


class TestMedia:
    def test_attach_and_read(self, seeded):
        store = seeded.hub.annotations
        record = store.create_annotation(seeded.alice, seeded.image.id, seeded.box_template.id, box_at(10, 10))
        media = store.add_media(seeded.alice, record.id, "call.wav", "audio/wav", b"RIFFdata")
        assert store.media_path(media.id).read_bytes() == b"RIFFdata"
        assert store.get_annotation(record.id).media_ids == [media.id]

    def test_media_survives_soft_delete(self, seeded):
        store = seeded.hub.annotations
        record = store.create_annotation(seeded.alice, seeded.image.id, seeded.box_template.id, box_at(10, 10))
        media = store.add_media(seeded.alice, record.id, "clip.mp4", "video/mp4", b"x")
        store.delete_annotation(seeded.alice, record.id)
        assert store.get_media(media.id).annotation_id == record.id

    def test_media_purged_with_image(self, seeded):
        store = seeded.hub.annotations
        record = store.create_annotation(seeded.alice, seeded.image.id, seeded.box_template.id, box_at(10, 10))
        media = store.add_media(seeded.alice, record.id, "clip.mp4", "video/mp4", b"x")
        seeded.hub.images.delete_image(seeded.alice, seeded.image.id)
        with pytest.raises(errors.NotFound):
            store.get_media(media.id)
