"""Demonstration frames and their edited variants."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .planner import EditPlan
from .validation import MIN_FRAME_SIZE, check_image, check_mask


@dataclass(eq=False)
class DemonstrationFrame:
    """One RGB observation plus its instruction.

    ``state`` and ``action`` are opaque bytes carried through untouched.
    """

    frame_id: str
    image: np.ndarray
    instruction: str
    target_phrase: str | None = None
    trajectory_footprint: np.ndarray | None = None
    episode_id: str = ""
    state: bytes | None = None
    action: bytes | None = None

    def __post_init__(self):
        self.image = check_image(self.image, min_size=MIN_FRAME_SIZE)
        if self.trajectory_footprint is not None:
            self.trajectory_footprint = check_mask(
                self.trajectory_footprint, self.image.shape[:2], name="trajectory_footprint"
            )

    @property
    def size(self) -> tuple[int, int]:
        return self.image.shape[:2]


@dataclass(eq=False)
class EditedFrame:
    source_frame_id: str
    image: np.ndarray
    plan: EditPlan
    variant_index: int
    edited_region: np.ndarray
    info: dict = field(default_factory=dict)
    state: bytes | None = None
    action: bytes | None = None

    def __post_init__(self):
        self.image = check_image(self.image)
        self.edited_region = check_mask(self.edited_region, self.image.shape[:2], name="edited_region")
        if self.variant_index < 0:
            raise ValueError("variant_index must be >= 0")

    @property
    def file_stem(self) -> str:
        return f"{self.plan.operation.value}_{self.plan.plan_hash}_{self.variant_index}"
