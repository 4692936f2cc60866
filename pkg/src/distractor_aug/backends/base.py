"""Backend roles and the contracts every implementation honours."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Protocol, Sequence, runtime_checkable

import numpy as np

from ..masks import BBox
from ..objects import DetectedObject


class BackendKind(str, enum.Enum):
    DETECTOR = "detector"
    SEGMENTER = "segmenter"
    MASK_INPAINTER = "mask_inpainter"
    PROMPTED_INPAINTER = "prompted_inpainter"
    SUGGESTER = "suggester"
    FEATURE_EXTRACTOR = "feature_extractor"


SIZE_CLASSES = ("small", "medium", "large")


@dataclass(frozen=True)
class BackendDescriptor:
    kind: BackendKind
    implementation_id: str
    version: str
    endpoint: str | None = None
    remote: bool = False

    def __post_init__(self):
        object.__setattr__(self, "kind", BackendKind(self.kind))
        if self.remote and not self.endpoint:
            raise ValueError(f"remote {self.kind.value} backend requires an endpoint")
        if not self.remote and self.endpoint:
            raise ValueError(f"local {self.kind.value} backend must not declare an endpoint")

    def to_dict(self) -> dict:
        d = {"kind": self.kind.value, "implementation_id": self.implementation_id, "version": self.version}
        if self.endpoint:
            d["endpoint"] = self.endpoint
        return d


class BackendError(RuntimeError):
    """A backend call failed.

    ``retriable`` distinguishes transient failures (timeouts, 5xx) from
    permanent ones (malformed request, 4xx).
    """

    def __init__(self, message: str, *, retriable: bool = True, code: str | None = None, frame_id: str | None = None):
        super().__init__(message)
        self.retriable = retriable
        self.code = code
        self.frame_id = frame_id

    def with_frame(self, frame_id: str) -> "BackendError":
        self.frame_id = frame_id
        return self


class RetriesExhausted(BackendError):
    def __init__(self, message: str, attempts: int, **kw):
        super().__init__(message, retriable=True, **kw)
        self.attempts = attempts


class SuggestionError(BackendError):
    """The suggester had nothing usable for this label."""

    def __init__(self, message: str):
        super().__init__(message, retriable=False, code="no_suggestion")


@dataclass(frozen=True)
class Suggestion:
    name: str
    description: str
    size_class: str


@runtime_checkable
class Detector(Protocol):
    descriptor: BackendDescriptor

    def detect(self, image: np.ndarray, prompt: str | None = None, *, frame_id: str | None = None) -> list[DetectedObject]: ...


@runtime_checkable
class Segmenter(Protocol):
    descriptor: BackendDescriptor

    def segment(self, image: np.ndarray, boxes: Sequence[BBox]) -> list[tuple[np.ndarray, float]]: ...


@runtime_checkable
class MaskInpainter(Protocol):
    descriptor: BackendDescriptor

    def inpaint(self, image: np.ndarray, mask: np.ndarray) -> np.ndarray: ...


@runtime_checkable
class PromptedInpainter(Protocol):
    descriptor: BackendDescriptor

    def inpaint(self, image: np.ndarray, mask: np.ndarray, prompt: str) -> np.ndarray: ...


@runtime_checkable
class ObjectSuggester(Protocol):
    descriptor: BackendDescriptor

    def suggest(self, object_label: str, context: str) -> Suggestion: ...


@runtime_checkable
class FeatureExtractor(Protocol):
    descriptor: BackendDescriptor
    dim: int

    def embed(self, images: Sequence[np.ndarray]) -> np.ndarray: ...


def objects_from_records(records, image_shape: tuple[int, int], min_score: float = 0.0) -> list[DetectedObject]:
    """Build ``DetectedObject``s from ``{x, y, w, h, label, score}`` records.

    Boxes reaching past the image are clipped and flagged; boxes that end up
    with no area inside the image are dropped. Ids follow record order.
    """
    h, w = image_shape
    out = []
    for rec in records:
        score = float(rec.get("score", 1.0))
        if score < min_score:
            continue
        x0, y0 = int(rec["x"]), int(rec["y"])
        x1, y1 = x0 + int(rec["w"]), y0 + int(rec["h"])
        cx0, cy0, cx1, cy1 = max(x0, 0), max(y0, 0), min(x1, w), min(y1, h)
        if cx1 <= cx0 or cy1 <= cy0:
            continue
        clipped = (cx0, cy0, cx1, cy1) != (x0, y0, x1, y1)
        out.append(
            DetectedObject(
                object_id=len(out),
                label=str(rec["label"]),
                bbox=BBox(cx0, cy0, cx1 - cx0, cy1 - cy0),
                detection_confidence=min(max(score, 0.0), 1.0),
                clipped=clipped,
            )
        )
    return out
