"""Binary-mask algebra: union, square dilation, overlap and edit safety.

Masks are plain 2-D ``numpy`` boolean arrays. Nothing here touches pixels of
an RGB image; the editors build on these primitives.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .validation import check_mask, check_same_shape

__all__ = [
    "BBox",
    "SafetyVerdict",
    "union",
    "dilate",
    "overlap_fraction",
    "check_edit_safety",
    "default_dil",
    "rle_encode",
    "rle_decode",
    "read_mask_png",
    "write_mask_png",
]

CONTENT_ADDING_OPS = frozenset({"restyle", "replace"})


@dataclass(frozen=True)
class BBox:
    """Axis-aligned pixel box, top-left corner plus extent."""

    x: int
    y: int
    w: int
    h: int

    def __post_init__(self):
        if self.w < 1 or self.h < 1:
            raise ValueError(f"bbox extent must be >= 1, got w={self.w} h={self.h}")
        if self.x < 0 or self.y < 0:
            raise ValueError(f"bbox origin must be non-negative, got ({self.x}, {self.y})")

    @property
    def area(self) -> int:
        return self.w * self.h

    def fits(self, shape: tuple[int, int]) -> bool:
        h, w = shape
        return self.x + self.w <= w and self.y + self.h <= h

    def to_mask(self, shape: tuple[int, int], pad: int = 0) -> np.ndarray:
        out = np.zeros(shape, dtype=bool)
        out[max(self.y - pad, 0) : self.y + self.h + pad, max(self.x - pad, 0) : self.x + self.w + pad] = True
        return out

    def to_dict(self) -> dict:
        return {"x": self.x, "y": self.y, "w": self.w, "h": self.h}

    @classmethod
    def from_dict(cls, d: dict) -> "BBox":
        return cls(int(d["x"]), int(d["y"]), int(d["w"]), int(d["h"]))

    @classmethod
    def from_mask(cls, mask: np.ndarray) -> "BBox":
        ys, xs = np.nonzero(mask)
        if ys.size == 0:
            raise ValueError("cannot take the bounding box of an empty mask")
        return cls(int(xs.min()), int(ys.min()), int(xs.max() - xs.min() + 1), int(ys.max() - ys.min() + 1))


class SafetyVerdict(str, enum.Enum):
    OK = "ok"
    TARGET_CONFLICT = "target_conflict"
    TRAJECTORY_CONFLICT = "trajectory_conflict"


def union(masks, shape: tuple[int, int] | None = None) -> np.ndarray:
    """Pixelwise OR of ``masks``.

    ``shape`` is required when ``masks`` is empty, in which case the all-false
    mask of that shape is returned.
    """
    masks = [check_mask(m) for m in masks]
    if not masks:
        if shape is None:
            raise ValueError("shape is required for the union of no masks")
        return np.zeros(shape, dtype=bool)
    got = check_same_shape(*masks)
    if shape is not None and tuple(shape) != got:
        raise ValueError(f"dimension mismatch: masks are {got}, requested {tuple(shape)}")
    return np.logical_or.reduce(masks)


def _dilate_axis(mask: np.ndarray, dil: int, axis: int) -> np.ndarray:
    out = mask.copy()
    n = mask.shape[axis]
    for k in range(1, min(dil, n - 1) + 1):
        fwd = [slice(None)] * 2
        bwd = [slice(None)] * 2
        fwd[axis], bwd[axis] = slice(k, None), slice(None, -k)
        # shift by +k and -k along the axis
        out[tuple(fwd)] |= mask[tuple(bwd)]
        out[tuple(bwd)] |= mask[tuple(fwd)]
    return out


def dilate(mask, dil: int) -> np.ndarray:
    """Dilate with a (2*dil+1)-wide square element, clipped at the borders.

    The square element is separable, so this runs as two 1-D passes.
    """
    mask = check_mask(mask)
    if int(dil) != dil or dil < 0:
        raise ValueError(f"dil must be a non-negative integer, got {dil!r}")
    dil = int(dil)
    if dil == 0:
        return mask.copy()
    return _dilate_axis(_dilate_axis(mask, dil, 0), dil, 1)


def overlap_fraction(a, b) -> float:
    """Fraction of ``a``'s pixels that are also set in ``b``."""
    a, b = check_mask(a, name="a"), check_mask(b, name="b")
    check_same_shape(a, b)
    total = int(a.sum())
    if total == 0:
        raise ValueError("overlap_fraction is undefined for an empty first mask")
    return int(np.logical_and(a, b).sum()) / total


def check_edit_safety(edit_region, target_mask, trajectory_footprint=None, operation: str = "remove") -> SafetyVerdict:
    """Decide whether an edit region may be applied.

    Touching the target is always a conflict. Intersecting the trajectory
    footprint only matters for operations that put new content into the
    scene (restyle, replace); removing an object cannot block a recorded
    motion.
    """
    edit_region = check_mask(edit_region, name="edit_region")
    target_mask = check_mask(target_mask, edit_region.shape, name="target_mask")
    if np.logical_and(edit_region, target_mask).any():
        return SafetyVerdict.TARGET_CONFLICT
    if trajectory_footprint is not None and operation in CONTENT_ADDING_OPS:
        footprint = check_mask(trajectory_footprint, edit_region.shape, name="trajectory_footprint")
        if np.logical_and(edit_region, footprint).any():
            return SafetyVerdict.TRAJECTORY_CONFLICT
    return SafetyVerdict.OK


def default_dil(width: int, base: int = 7, base_width: int = 640) -> int:
    """Dilation radius scaled from ``base`` px at ``base_width`` to ``width``."""
    return max(int(round(base * width / base_width)), 0)


def rle_encode(mask) -> list[int]:
    """Row-major run lengths, alternating, starting with a (possibly 0) zero-run.

    >>> rle_encode(np.array([[False, True, True, False]]))
    [1, 2, 1]
    """
    flat = check_mask(mask).ravel()
    change = np.flatnonzero(flat[1:] != flat[:-1]) + 1
    bounds = np.concatenate(([0], change, [flat.size]))
    runs = np.diff(bounds).tolist()
    if flat[0]:
        runs.insert(0, 0)
    return runs


def rle_decode(runs, shape: tuple[int, int]) -> np.ndarray:
    runs = [int(r) for r in runs]
    h, w = shape
    if any(r < 0 for r in runs):
        raise ValueError("run lengths must be non-negative")
    if sum(runs) != h * w:
        raise ValueError(f"run lengths sum to {sum(runs)}, expected {h * w}")
    values = np.arange(len(runs)) % 2 == 1
    return np.repeat(values, runs).reshape(h, w)


def read_mask_png(path: str | Path) -> np.ndarray:
    with Image.open(path) as im:
        arr = np.asarray(im.convert("L"))
    return arr > 127


def write_mask_png(mask, path: str | Path) -> None:
    mask = check_mask(mask)
    Image.fromarray(mask.astype(np.uint8) * 255).save(path, format="PNG")
