import hashlib
import json
from pathlib import Path

import numpy as np
import pytest
from PIL import Image

from distractor_aug.dataset import (
    DatasetError,
    EditRecord,
    FormatError,
    OutputExistsError,
    load_dataset,
    load_edited,
    save_edited,
    validate_dataset,
    write_dataset,
)
from distractor_aug.frames import DemonstrationFrame, EditedFrame
from distractor_aug.planner import EditPlan


def make_frames(n=3, shape=(64, 64), footprint=False):
    rng = np.random.default_rng(7)
    frames = []
    for i in range(n):
        fp = None
        if footprint:
            fp = np.zeros(shape, bool)
            fp[10:20, 10:40] = True
        frames.append(
            DemonstrationFrame(
                f"ep0_{i:03d}",
                rng.integers(0, 256, (*shape, 3), dtype=np.uint8),
                "pick up the blue cube",
                target_phrase="blue cube" if i == 0 else None,
                trajectory_footprint=fp,
                episode_id="ep0",
                state=bytes([i, 1, 2]),
                action=b"\xff" * i,
            )
        )
    return frames


def tree_digest(root: Path) -> dict:
    return {str(p.relative_to(root)): (p.stat().st_mtime_ns, hashlib.sha256(p.read_bytes()).hexdigest()) for p in root.rglob("*") if p.is_file()}


def edited(frame, variant=0):
    region = np.zeros(frame.image.shape[:2], bool)
    region[5:15, 5:25] = True
    image = frame.image.copy()
    image[region] = 9
    plan = EditPlan("restyle", [1, 3], 42, 0, {"texture_id": "striped-01", "jitter": {"hue_shift": 0.05, "saturation_scale": 1.1, "value_scale": 0.9}})
    return EditedFrame(frame.frame_id, image, plan, variant, region, {"dil": 0}, frame.state, frame.action)


class TestLoad:
    def test_three_frames(self, tmp_path):
        frames = make_frames(footprint=True)
        ds = load_dataset(write_dataset(tmp_path, frames))
        assert len(ds) == 3 and ds.errors == []
        assert ds.frame_ids == [f.frame_id for f in frames]
        for orig, got in zip(frames, ds):
            np.testing.assert_array_equal(got.image, orig.image)
            np.testing.assert_array_equal(got.trajectory_footprint, orig.trajectory_footprint)
            assert (got.state, got.action, got.target_phrase) == (orig.state, orig.action, orig.target_phrase)
        assert validate_dataset(ds.manifest) == []

    def test_empty_manifest(self, tmp_path):
        (tmp_path / "meta.json").write_text(json.dumps({"schema_version": "1.0", "episodes": []}))
        ds = load_dataset(tmp_path)
        assert len(ds) == 0 and ds.errors == []

    def test_missing_image_recorded(self, tmp_path):
        write_dataset(tmp_path, make_frames())
        (tmp_path / "frames" / "ep0_001.png").unlink()
        ds = load_dataset(tmp_path)
        assert ds.frame_ids == ["ep0_000", "ep0_002"]
        assert [e.frame_id for e in ds.errors] == ["ep0_001"]

    def test_non_png_image_recorded(self, tmp_path):
        write_dataset(tmp_path, make_frames())
        Image.open(tmp_path / "frames" / "ep0_002.png").convert("RGB").save(tmp_path / "frames" / "ep0_002.png", format="JPEG")
        ds = load_dataset(tmp_path)
        assert [e.frame_id for e in ds.errors] == ["ep0_002"]

    def test_missing_meta_fatal(self, tmp_path):
        with pytest.raises(DatasetError, match="meta.json"):
            load_dataset(tmp_path)

    def test_load_does_not_touch_files(self, tmp_path):
        write_dataset(tmp_path, make_frames(footprint=True))
        (tmp_path / "frames" / "ep0_001.png").write_bytes(b"garbage")
        before = tree_digest(tmp_path)
        ds = load_dataset(tmp_path)
        list(ds)
        assert tree_digest(tmp_path) == before


class TestValidate:
    def test_duplicate_ids(self, tmp_path):
        write_dataset(tmp_path, make_frames())
        meta = json.loads((tmp_path / "meta.json").read_text())
        meta["episodes"].append({"episode_id": "ep1", "frames": ["ep0_000"]})
        (tmp_path / "meta.json").write_text(json.dumps(meta))
        problems = validate_dataset(load_dataset(tmp_path).manifest)
        assert len(problems) == 1 and "duplicate" in problems[0]

    def test_footprint_two_pixels_narrower(self, tmp_path):
        write_dataset(tmp_path, make_frames())
        (tmp_path / "footprints").mkdir(exist_ok=True)
        Image.fromarray(np.zeros((64, 62), np.uint8)).save(tmp_path / "footprints" / "ep0_001.png")
        problems = validate_dataset(load_dataset(tmp_path).manifest)
        assert len(problems) == 1
        assert "ep0_001" in problems[0] and "dimension mismatch" in problems[0]

    def test_dangling_edit(self, tmp_path):
        frames = make_frames()
        write_dataset(tmp_path, frames)
        save_edited(edited(frames[0]), tmp_path)
        ds = load_dataset(tmp_path)
        ds.manifest.edits.append(EditRecord("ghost", "remove", "0" * 16, 0, "x.png", "x.json"))
        problems = validate_dataset(ds.manifest)
        assert len(problems) == 1 and "ghost" in problems[0]

    def test_small_frame(self, tmp_path):
        write_dataset(tmp_path, make_frames(1))
        Image.fromarray(np.zeros((32, 64, 3), np.uint8)).save(tmp_path / "frames" / "ep0_000.png")
        problems = validate_dataset(load_dataset(tmp_path).manifest)
        assert len(problems) == 1 and "smaller" in problems[0]


class TestSaveEdited:
    def test_round_trip_exact(self, tmp_path):
        frame = make_frames(1)[0]
        ef = edited(frame, variant=1)
        image_path, manifest_path = save_edited(ef, tmp_path)
        assert image_path.name == f"restyle_{ef.plan.plan_hash}_1.png"
        assert manifest_path.parent == tmp_path / "edits" / frame.frame_id
        back = load_edited(manifest_path)
        np.testing.assert_array_equal(back.image, ef.image)
        np.testing.assert_array_equal(back.edited_region, ef.edited_region)
        assert back.plan == ef.plan
        assert back.plan.to_json() == ef.plan.to_json()
        assert (back.state, back.action, back.info) == (ef.state, ef.action, ef.info)

    def test_variants_get_distinct_files(self, tmp_path):
        frame = make_frames(1)[0]
        paths = {save_edited(edited(frame, v), tmp_path)[0] for v in range(3)}
        assert len(paths) == 3

    def test_lossy_format_rejected(self, tmp_path):
        with pytest.raises(FormatError):
            save_edited(edited(make_frames(1)[0]), tmp_path, image_format="jpeg")
        assert not (tmp_path / "edits").exists()

    def test_collision(self, tmp_path):
        ef = edited(make_frames(1)[0])
        save_edited(ef, tmp_path)
        with pytest.raises(OutputExistsError):
            save_edited(ef, tmp_path)
        image_path, _ = save_edited(ef, tmp_path, overwrite=True)
        assert sorted(p.name for p in image_path.parent.iterdir()) == sorted([image_path.name, image_path.with_suffix(".json").name])

    def test_edits_scanned_on_load(self, tmp_path):
        frames = make_frames()
        write_dataset(tmp_path, frames)
        ef = edited(frames[2], 1)
        save_edited(ef, tmp_path)
        [rec] = load_dataset(tmp_path).manifest.edits
        assert (rec.source_frame_id, rec.operation, rec.plan_hash, rec.variant_index) == ("ep0_002", "restyle", ef.plan.plan_hash, 1)

    def test_tampered_plan_rejected(self, tmp_path):
        _, manifest_path = save_edited(edited(make_frames(1)[0]), tmp_path)
        d = json.loads(manifest_path.read_text())
        d["plan"]["seed"] = 43
        manifest_path.write_text(json.dumps(d))
        with pytest.raises(ValueError, match="hash"):
            load_edited(manifest_path)
