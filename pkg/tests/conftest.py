from __future__ import annotations

import numpy as np
import pytest

from distractor_aug.backends.base import BackendDescriptor, BackendKind, objects_from_records
from distractor_aug.frames import DemonstrationFrame
from distractor_aug.masks import BBox
from distractor_aug.objects import DetectedObject, SegmentedObject
from distractor_aug.scene import SceneGraph


class StaticDetector:
    """Returns the same records for every image."""

    def __init__(self, records):
        self.records = records
        self.descriptor = BackendDescriptor(BackendKind.DETECTOR, "static", "test")

    def detect(self, image, prompt=None, *, frame_id=None):
        return objects_from_records(self.records, np.asarray(image).shape[:2])


def rec(x, y, w, h, label, score=0.9):
    return {"x": x, "y": y, "w": w, "h": h, "label": label, "score": score}


def seg(object_id, label, box, shape, conf=0.9, mask=None):
    box = BBox(*box)
    m = box.to_mask(shape) if mask is None else mask
    return SegmentedObject(DetectedObject(object_id, label, box, conf), m, 1.0)


def gray_frame(shape=(64, 64), value=128, frame_id="f0", instruction="pick up the blue cube", **kw):
    image = np.full((*shape, 3), value, dtype=np.uint8)
    return DemonstrationFrame(frame_id, image, instruction, **kw)


def simple_scene(shape=(64, 64), frame_id="f0"):
    """Target at the top-left, three small distractors elsewhere."""
    target = seg(0, "blue cube", (2, 2, 10, 10), shape)
    cands = [
        seg(1, "red bowl", (30, 4, 8, 8), shape),
        seg(2, "green ball", (6, 40, 10, 10), shape),
        seg(3, "spoon", (40, 40, 12, 6), shape),
    ]
    return SceneGraph(frame_id, target, cands, [], shape)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
