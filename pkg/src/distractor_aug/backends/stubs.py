"""Deterministic offline backends.

They stand in for the learned models so the whole pipeline runs, and is
testable, without a GPU or network. Each one is simple enough to reason
about analytically.
"""

from __future__ import annotations

import json
import re
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from ..masks import BBox
from ..validation import check_image, check_mask
from .base import (
    SIZE_CLASSES,
    BackendDescriptor,
    BackendError,
    BackendKind,
    Suggestion,
    SuggestionError,
    objects_from_records,
)

STUB_VERSION = "1"

COLOR_RGB: dict[str, tuple[int, int, int]] = {
    "red": (200, 30, 30),
    "green": (40, 160, 60),
    "blue": (30, 60, 200),
    "yellow": (230, 210, 40),
    "orange": (240, 140, 30),
    "purple": (130, 50, 160),
    "pink": (240, 130, 180),
    "brown": (120, 80, 40),
    "black": (20, 20, 20),
    "white": (240, 240, 240),
    "gray": (128, 128, 128),
    "grey": (128, 128, 128),
}


class AnnotationDetector:
    """Reads boxes from ``<frame_id>.detections.json`` sidecars.

    The sidecar holds ``{"objects": [{x, y, w, h, label, score}, ...]}``,
    the same shape as the remote ``/v1/detect`` response.
    """

    def __init__(self, sidecar_dir: str | Path):
        self.sidecar_dir = Path(sidecar_dir)
        self.descriptor = BackendDescriptor(BackendKind.DETECTOR, "annotation-sidecar", STUB_VERSION)

    def sidecar_path(self, frame_id: str) -> Path:
        return self.sidecar_dir / f"{frame_id}.detections.json"

    def detect(self, image, prompt=None, *, frame_id=None):
        if frame_id is None:
            raise BackendError("AnnotationDetector needs a frame_id", retriable=False, code="bad_request")
        path = self.sidecar_path(frame_id)
        try:
            payload = json.loads(path.read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise BackendError(f"no detection sidecar at {path}", retriable=False, code="not_found", frame_id=frame_id)
        except json.JSONDecodeError as exc:
            raise BackendError(f"malformed sidecar {path}: {exc}", retriable=False, code="bad_sidecar", frame_id=frame_id)
        records = payload["objects"] if isinstance(payload, dict) else payload
        return objects_from_records(records, np.asarray(image).shape[:2])


class RectMaskSegmenter:
    """Returns each box as a filled rectangle with confidence 1.0."""

    def __init__(self):
        self.descriptor = BackendDescriptor(BackendKind.SEGMENTER, "rect-mask", STUB_VERSION)

    def segment(self, image, boxes: Sequence[BBox]):
        shape = np.asarray(image).shape[:2]
        return [(box.to_mask(shape), 1.0) for box in boxes]


def _neighbour_sum(arr: np.ndarray) -> np.ndarray:
    """Sum over the 8-neighbourhood (centre excluded), zero outside the image."""
    h, w = arr.shape[:2]
    padded = np.pad(arr, [(1, 1), (1, 1)] + [(0, 0)] * (arr.ndim - 2))
    out = np.zeros_like(arr)
    for dy in (-1, 0, 1):
        for dx in (-1, 0, 1):
            if dy or dx:
                out += padded[1 + dy : 1 + dy + h, 1 + dx : 1 + dx + w]
    return out


def ring_mean_fill(image: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Fill ``mask`` from the outside in, one boundary ring per pass.

    Each masked pixel adjacent to known pixels takes the mean of its known
    8-neighbours; filled pixels become known for the next ring. Values stay
    in floating point until the final rounding. With nothing known (mask
    covers the image) the image is returned unchanged.
    """
    image = check_image(image)
    mask = check_mask(mask, image.shape[:2])
    if not mask.any() or mask.all():
        return image.copy()
    values = image.astype(np.float64)
    known = ~mask
    remaining = mask.copy()
    while remaining.any():
        weights = known.astype(np.float64)
        sums = _neighbour_sum(values * weights[..., None])
        counts = _neighbour_sum(weights)
        front = remaining & (counts > 0)
        values[front] = sums[front] / counts[front][:, None]
        known |= front
        remaining &= ~front
    out = image.copy()
    out[mask] = np.clip(np.rint(values[mask]), 0, 255).astype(np.uint8)
    return out


class RingMeanFill:
    def __init__(self):
        self.descriptor = BackendDescriptor(BackendKind.MASK_INPAINTER, "ring-mean-fill", STUB_VERSION)

    def inpaint(self, image, mask):
        return ring_mean_fill(image, mask)


def parse_color(prompt: str) -> str | None:
    for token in re.findall(r"[a-z]+", prompt.lower()):
        if token in COLOR_RGB:
            return token
    return None


def inscribed_ellipse(mask: np.ndarray) -> np.ndarray:
    """Pixels of ``mask`` whose centres fall inside the ellipse inscribed in its bbox."""
    if not mask.any():
        return mask.copy()
    box = BBox.from_mask(mask)
    cy, cx = box.y + box.h / 2, box.x + box.w / 2
    yy, xx = np.mgrid[: mask.shape[0], : mask.shape[1]]
    inside = ((xx + 0.5 - cx) / (box.w / 2)) ** 2 + ((yy + 0.5 - cy) / (box.h / 2)) ** 2 <= 1.0
    return inside & mask


class FlatColorObject:
    """Paints a flat-coloured blob named by the first colour word in the prompt.

    ``fill="ellipse"`` paints the ellipse inscribed in the mask and ring-mean
    fills the rest; ``fill="full"`` paints the whole mask.
    """

    def __init__(self, fill: str = "ellipse", default_color: str = "gray"):
        if fill not in ("ellipse", "full"):
            raise ValueError(f"fill must be 'ellipse' or 'full', got {fill!r}")
        self.fill = fill
        self.default_color = default_color
        self.descriptor = BackendDescriptor(BackendKind.PROMPTED_INPAINTER, f"flat-color-{fill}", STUB_VERSION)

    def inpaint(self, image, mask, prompt):
        image = check_image(image)
        mask = check_mask(mask, image.shape[:2])
        color = COLOR_RGB[parse_color(prompt) or self.default_color]
        if self.fill == "full":
            out = image.copy()
            out[mask] = color
            return out
        out = ring_mean_fill(image, mask)
        out[inscribed_ellipse(mask)] = color
        return out


DEFAULT_SUGGESTIONS: dict[str, tuple[str, str, str]] = {
    "cooking pan": ("dish cloth", "a folded gray dish cloth", "medium"),
    "pan": ("dish cloth", "a folded gray dish cloth", "medium"),
    "pot": ("colander", "a steel colander", "medium"),
    "orange": ("apple", "a red apple", "small"),
    "apple": ("orange", "a ripe orange", "small"),
    "spoon": ("fork", "a metal fork", "small"),
    "fork": ("spoon", "a wooden spoon", "small"),
    "cup": ("mug", "a ceramic mug", "small"),
    "mug": ("cup", "a paper cup", "small"),
    "bowl": ("plate", "a small ceramic plate", "medium"),
    "plate": ("bowl", "a plastic bowl", "medium"),
    "block": ("sponge", "a kitchen sponge", "small"),
    "cube": ("dice", "a large foam dice", "small"),
    "bottle": ("can", "a soda can", "small"),
    "towel": ("napkin", "a cloth napkin", "medium"),
    "cutting board": ("baking tray", "a metal baking tray", "large"),
}


class DictionarySuggester:
    """Looks the label up in a fixed table of household-object swaps."""

    def __init__(self, table: Mapping[str, tuple[str, str, str]] | None = None):
        self.table = {k.lower().strip(): tuple(v) for k, v in (table or DEFAULT_SUGGESTIONS).items()}
        for name, (_, _, size) in self.table.items():
            if size not in SIZE_CLASSES:
                raise ValueError(f"bad size class {size!r} for {name!r}")
        self.descriptor = BackendDescriptor(BackendKind.SUGGESTER, "dictionary", STUB_VERSION)

    def suggest(self, object_label, context=""):
        key = " ".join(re.findall(r"[a-z0-9]+", object_label.lower()))
        if key not in self.table:
            raise SuggestionError(f"no suggestion for {object_label!r}")
        return Suggestion(*self.table[key])


class ColorHistogramExtractor:
    """8 bins per RGB channel, normalised by pixel count (D = 24)."""

    bins = 8
    dim = 24

    def __init__(self):
        self.descriptor = BackendDescriptor(BackendKind.FEATURE_EXTRACTOR, "color-histogram-8", STUB_VERSION)

    def embed_one(self, image) -> np.ndarray:
        image = check_image(image)
        idx = image.reshape(-1, 3).astype(np.int64) * self.bins // 256
        n = idx.shape[0]
        return np.concatenate([np.bincount(idx[:, c], minlength=self.bins) / n for c in range(3)])

    def embed(self, images):
        if len(images) == 0:
            return np.zeros((0, self.dim))
        return np.stack([self.embed_one(im) for im in images])
