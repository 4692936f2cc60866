"""Scene decomposition: detect, segment, pick the target, drop oversized objects."""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass, field

import numpy as np

from .backends.base import BackendError
from .objects import DetectedObject, SegmentedObject
from .validation import check_image

LARGE_OBJECT_THRESHOLD = 0.40

# words that never name an object in a manipulation instruction
_STOPWORDS = frozenset(
    "a an the to of in on into onto at from with and or up down pick place put move stack lift grab "
    "take push pull open close it its this that then next near close by over under above below left "
    "right top bottom side front back please robot".split()
)


class TargetNotFound(LookupError):
    """No detected object matches the task instruction; the frame must be skipped."""

    def __init__(self, message: str, frame_id: str | None = None):
        super().__init__(message)
        self.frame_id = frame_id


class DroppedObjectWarning(UserWarning):
    pass


@dataclass(frozen=True)
class DroppedObject:
    object_id: int
    label: str
    reason: str

    def to_dict(self) -> dict:
        return {"object_id": self.object_id, "label": self.label, "reason": self.reason}


@dataclass(eq=False)
class SceneGraph:
    frame_id: str
    target: SegmentedObject
    candidates: list[SegmentedObject]
    excluded_large: list[SegmentedObject]
    image_size: tuple[int, int]
    dropped: list[DroppedObject] = field(default_factory=list)
    size_threshold: float = LARGE_OBJECT_THRESHOLD

    def __post_init__(self):
        self.image_size = tuple(int(v) for v in self.image_size)
        cand = {o.object_id for o in self.candidates}
        large = {o.object_id for o in self.excluded_large}
        tid = self.target.object_id
        if tid in cand or tid in large:
            raise ValueError("the target may not be a candidate or excluded object")
        if cand & large:
            raise ValueError(f"objects {sorted(cand & large)} are both candidates and excluded")
        if len(cand) != len(self.candidates):
            raise ValueError("duplicate candidate ids")
        for obj in [self.target, *self.candidates, *self.excluded_large]:
            if obj.mask.shape != self.image_size:
                raise ValueError(f"object {obj.object_id} mask shape {obj.mask.shape} != {self.image_size}")
        for obj in self.candidates:
            if is_large(obj.bbox, self.image_size, self.size_threshold):
                raise ValueError(f"candidate {obj.object_id} fails the size filter")

    @property
    def candidate_ids(self) -> list[int]:
        return sorted(o.object_id for o in self.candidates)

    def get(self, object_id: int) -> SegmentedObject:
        for obj in [self.target, *self.candidates, *self.excluded_large]:
            if obj.object_id == object_id:
                return obj
        raise KeyError(object_id)

    def to_dict(self) -> dict:
        return {
            "frame_id": self.frame_id,
            "image_size": list(self.image_size),
            "size_threshold": self.size_threshold,
            "target": self.target.to_dict(),
            "candidates": [o.to_dict() for o in self.candidates],
            "excluded_large": [o.to_dict() for o in self.excluded_large],
            "dropped": [d.to_dict() for d in self.dropped],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SceneGraph":
        shape = tuple(d["image_size"])
        return cls(
            frame_id=d["frame_id"],
            target=SegmentedObject.from_dict(d["target"], shape),
            candidates=[SegmentedObject.from_dict(o, shape) for o in d["candidates"]],
            excluded_large=[SegmentedObject.from_dict(o, shape) for o in d["excluded_large"]],
            image_size=shape,
            dropped=[DroppedObject(int(x["object_id"]), x["label"], x["reason"]) for x in d.get("dropped", [])],
            size_threshold=float(d.get("size_threshold", LARGE_OBJECT_THRESHOLD)),
        )


def _parse(frame, detector, segmenter) -> tuple[list[SegmentedObject], list[DroppedObject]]:
    image = check_image(frame.image)
    try:
        detections: list[DetectedObject] = detector.detect(image, None, frame_id=frame.frame_id)
        results = segmenter.segment(image, [d.bbox for d in detections]) if detections else []
    except BackendError as exc:
        raise exc.with_frame(frame.frame_id)
    if len(results) != len(detections):
        raise BackendError(
            f"segmenter returned {len(results)} masks for {len(detections)} boxes",
            retriable=False,
            frame_id=frame.frame_id,
        )
    kept, dropped = [], []
    for det, (mask, score) in zip(detections, results):
        obj = SegmentedObject(det, np.asarray(mask, dtype=bool), float(score))
        problem = obj.mask_problem()
        if problem:
            dropped.append(DroppedObject(det.object_id, det.label, problem))
        else:
            kept.append(obj)
    return kept, dropped


def parse_objects(frame, detector, segmenter) -> list[SegmentedObject]:
    """Detect and segment every object in ``frame``.

    Detections whose masks come back empty (or spill well past their box)
    are dropped with a :class:`DroppedObjectWarning`.
    """
    kept, dropped = _parse(frame, detector, segmenter)
    for d in dropped:
        warnings.warn(f"frame {frame.frame_id}: dropped object {d.object_id} ({d.label}): {d.reason}", DroppedObjectWarning, stacklevel=2)
    return kept


def normalize_tokens(text: str) -> set[str]:
    return set(re.findall(r"[a-z0-9]+", text.lower()))


def phrase_tokens(instruction: str, target_phrase: str | None = None) -> set[str]:
    return normalize_tokens(target_phrase or instruction) - _STOPWORDS


def identify_target(objects, instruction: str, target_phrase: str | None = None) -> int:
    """Return the id of the object whose label best matches the target phrase.

    Score is the number of shared normalised tokens between the phrase (the
    explicit ``target_phrase``, else the instruction minus filler words) and
    the label. Ties go to the higher detection confidence, then the lower id.
    """
    if not objects:
        raise TargetNotFound("no objects to choose a target from")
    wanted = phrase_tokens(instruction, target_phrase)
    scored = []
    for obj in objects:
        overlap = len(wanted & normalize_tokens(obj.label))
        if overlap:
            scored.append((-overlap, -obj.base.detection_confidence, obj.object_id))
    if not scored:
        phrase = target_phrase or instruction
        raise TargetNotFound(f"no detected object matches {phrase!r}")
    return min(scored)[2]


def is_large(bbox, image_size: tuple[int, int], threshold: float = LARGE_OBJECT_THRESHOLD) -> bool:
    h, w = image_size
    return bbox.w > threshold * w or bbox.h > threshold * h


def filter_large_objects(objects, image_size, threshold: float = LARGE_OBJECT_THRESHOLD):
    """Split ``objects`` into (kept, excluded) by box size.

    An object is excluded when its box is strictly wider than
    ``threshold * W`` or strictly taller than ``threshold * H``.
    """
    if not 0.0 < threshold <= 1.0:
        raise ValueError(f"threshold must lie in (0, 1], got {threshold}")
    kept, excluded = [], []
    for obj in objects:
        (excluded if is_large(obj.bbox, image_size, threshold) else kept).append(obj)
    return kept, excluded


def build_scene_graph(frame, detector, segmenter, threshold: float = LARGE_OBJECT_THRESHOLD) -> SceneGraph:
    objects, dropped = _parse(frame, detector, segmenter)
    for d in dropped:
        warnings.warn(f"frame {frame.frame_id}: dropped object {d.object_id} ({d.label}): {d.reason}", DroppedObjectWarning, stacklevel=2)
    try:
        target_id = identify_target(objects, frame.instruction, getattr(frame, "target_phrase", None))
    except TargetNotFound as exc:
        exc.frame_id = frame.frame_id
        raise
    target = next(o for o in objects if o.object_id == target_id)
    # the size filter only ever applies to non-targets
    rest = [o for o in objects if o.object_id != target_id]
    kept, excluded = filter_large_objects(rest, frame.image.shape[:2], threshold)
    return SceneGraph(frame.frame_id, target, kept, excluded, frame.image.shape[:2], dropped, threshold)
