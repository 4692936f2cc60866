"""Synthetic cluttered tabletop scenes with exact clean renders.

Each scene has a flat or linear-gradient background, one target object and
``n_distractors`` primitive shapes casting a small offset shadow. For every
distractor we also render the scene without it (and without its shadow),
which is the ground truth a perfect removal should reproduce.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .frames import DemonstrationFrame
from .masks import BBox

TARGET_LABEL = "blue cube"
TARGET_COLOR = (30, 60, 200)
SHAPES = ("ball", "block", "box", "cone")
DISTRACTOR_COLORS = {
    "red": (200, 30, 30),
    "green": (40, 160, 60),
    "yellow": (230, 210, 40),
    "purple": (130, 50, 160),
    "black": (20, 20, 20),
    "white": (245, 245, 245),
    "brown": (120, 80, 40),
}
SHADOW_FACTOR = 0.75


@dataclass
class SyntheticObject:
    label: str
    bbox: BBox
    mask: np.ndarray
    color: tuple[int, int, int]

    def record(self, score: float = 0.9) -> dict:
        return {**self.bbox.to_dict(), "label": self.label, "score": score}


@dataclass
class SyntheticScene:
    frame: DemonstrationFrame
    background: np.ndarray
    target: SyntheticObject
    distractors: list[SyntheticObject]
    clean: list[np.ndarray]  # clean[i]: scene rendered without distractor i
    shadow_offset: int

    def detections(self) -> list[dict]:
        return [self.target.record(0.95)] + [d.record() for d in self.distractors]


def _background(rng, shape, kind: str) -> np.ndarray:
    h, w = shape
    base = rng.uniform(110, 170, size=3)
    if kind == "flat":
        return np.broadcast_to(np.rint(base), (h, w, 3)).astype(np.uint8)
    if kind != "gradient":
        raise ValueError(f"unknown background {kind!r}")
    yy, xx = np.mgrid[:h, :w].astype(np.float64)
    gx, gy = rng.uniform(-0.25, 0.25, size=2)
    img = base[None, None, :] + (gx * (xx - w / 2) + gy * (yy - h / 2))[..., None]
    return np.clip(np.rint(img), 0, 255).astype(np.uint8)


def _shape_mask(shape_name: str, box: BBox, image_shape) -> np.ndarray:
    yy, xx = np.mgrid[: image_shape[0], : image_shape[1]]
    inside = (xx >= box.x) & (xx < box.x + box.w) & (yy >= box.y) & (yy < box.y + box.h)
    cx, cy = box.x + box.w / 2, box.y + box.h / 2
    if shape_name == "ball":
        return inside & (((xx + 0.5 - cx) / (box.w / 2)) ** 2 + ((yy + 0.5 - cy) / (box.h / 2)) ** 2 <= 1)
    if shape_name == "cone":
        # apex at top centre
        rel = (yy + 0.5 - box.y) / box.h
        return inside & (np.abs(xx + 0.5 - cx) <= rel * box.w / 2)
    return inside


def _place(rng, shape, sizes, margin, placed: list[BBox], tries: int = 500) -> BBox:
    h, w = shape
    for _ in range(tries):
        bw, bh = (int(v) for v in rng.integers(sizes[0], sizes[1] + 1, size=2))
        x = int(rng.integers(margin, w - bw - margin))
        y = int(rng.integers(margin, h - bh - margin))
        if all(
            x + bw + margin <= p.x or p.x + p.w + margin <= x or y + bh + margin <= p.y or p.y + p.h + margin <= y
            for p in placed
        ):
            return BBox(x, y, bw, bh)
    raise RuntimeError("could not place object without overlap; use a larger image or fewer objects")


def _draw(image: np.ndarray, background: np.ndarray, obj: SyntheticObject, shadow: int) -> None:
    if shadow:
        cast = np.zeros_like(obj.mask)
        cast[shadow:, shadow:] = obj.mask[:-shadow, :-shadow]
        cast &= ~obj.mask
        image[cast] = np.rint(background[cast] * SHADOW_FACTOR).astype(np.uint8)
    image[obj.mask] = obj.color


def make_scene(
    seed: int,
    *,
    shape: tuple[int, int] = (160, 160),
    n_distractors: int = 5,
    background: str = "flat",
    shadow_offset: int = 2,
    sizes: tuple[int, int] = (12, 22),
    margin: int = 8,
    frame_id: str | None = None,
) -> SyntheticScene:
    rng = np.random.default_rng(seed)
    bg = _background(rng, shape, background)
    placed: list[BBox] = []
    box = _place(rng, shape, sizes, margin, placed)
    placed.append(box)
    target = SyntheticObject(TARGET_LABEL, box, _shape_mask("block", box, shape), TARGET_COLOR)
    colors = list(DISTRACTOR_COLORS)
    distractors = []
    for _ in range(n_distractors):
        box = _place(rng, shape, sizes, margin, placed)
        placed.append(box)
        shape_name = SHAPES[rng.integers(len(SHAPES))]
        color = colors[rng.integers(len(colors))]
        distractors.append(SyntheticObject(f"{color} {shape_name}", box, _shape_mask(shape_name, box, shape), DISTRACTOR_COLORS[color]))

    def render(skip: int | None = None) -> np.ndarray:
        img = bg.copy()
        for i, obj in enumerate([target, *distractors]):
            if i - 1 != skip or i == 0:
                _draw(img, bg, obj, shadow_offset)
        return img

    frame = DemonstrationFrame(
        frame_id=frame_id or f"scene{seed:04d}",
        image=render(),
        instruction=f"pick up the {TARGET_LABEL}",
        episode_id=f"ep{seed:04d}",
    )
    clean = [render(i) for i in range(n_distractors)]
    return SyntheticScene(frame, bg, target, distractors, clean, shadow_offset)
