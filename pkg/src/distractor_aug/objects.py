"""Detected and segmented scene objects."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .masks import BBox, rle_decode, rle_encode

# segmenters may smooth a few pixels past the detector box
MASK_BBOX_TOLERANCE = 2


@dataclass(frozen=True)
class DetectedObject:
    object_id: int
    label: str
    bbox: BBox
    detection_confidence: float
    clipped: bool = False

    def __post_init__(self):
        if not self.label.strip():
            raise ValueError("object label must be non-empty")
        if not 0.0 <= self.detection_confidence <= 1.0:
            raise ValueError(f"detection_confidence must lie in [0, 1], got {self.detection_confidence}")

    def to_dict(self) -> dict:
        return {
            "object_id": self.object_id,
            "label": self.label,
            "bbox": self.bbox.to_dict(),
            "detection_confidence": self.detection_confidence,
            "clipped": self.clipped,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DetectedObject":
        return cls(
            int(d["object_id"]),
            d["label"],
            BBox.from_dict(d["bbox"]),
            float(d["detection_confidence"]),
            bool(d.get("clipped", False)),
        )


@dataclass(frozen=True, eq=False)
class SegmentedObject:
    base: DetectedObject
    mask: np.ndarray
    segmentation_confidence: float

    def __post_init__(self):
        if not 0.0 <= self.segmentation_confidence <= 1.0:
            raise ValueError(f"segmentation_confidence must lie in [0, 1], got {self.segmentation_confidence}")

    @property
    def object_id(self) -> int:
        return self.base.object_id

    @property
    def label(self) -> str:
        return self.base.label

    @property
    def bbox(self) -> BBox:
        return self.base.bbox

    def mask_problem(self) -> str | None:
        """Why this mask is unusable, or ``None`` if it is fine."""
        if not self.mask.any():
            return "empty mask"
        allowed = self.bbox.to_mask(self.mask.shape, pad=MASK_BBOX_TOLERANCE)
        if (self.mask & ~allowed).any():
            return f"mask extends more than {MASK_BBOX_TOLERANCE} px beyond its bbox"
        return None

    def to_dict(self) -> dict:
        return {
            **self.base.to_dict(),
            "mask_rle": rle_encode(self.mask),
            "segmentation_confidence": self.segmentation_confidence,
        }

    @classmethod
    def from_dict(cls, d: dict, shape: tuple[int, int]) -> "SegmentedObject":
        return cls(DetectedObject.from_dict(d), rle_decode(d["mask_rle"], shape), float(d["segmentation_confidence"]))

    def __eq__(self, other):
        if not isinstance(other, SegmentedObject):
            return NotImplemented
        return (
            self.base == other.base
            and self.segmentation_confidence == other.segmentation_confidence
            and np.array_equal(self.mask, other.mask)
        )

    __hash__ = None
