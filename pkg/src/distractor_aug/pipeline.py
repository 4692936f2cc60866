"""Per-frame orchestration shared by the CLI and the estimator wrappers."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from .backends.base import BackendError
from .editors import UnsafeEditError, apply_plan
from .frames import EditedFrame
from .planner import EditPlan, PlannerConfig, frame_seed, plan_edits
from .scene import SceneGraph

log = logging.getLogger(__name__)


@dataclass
class FrameEdits:
    frame_id: str
    plans: list[EditPlan] = field(default_factory=list)
    edited: list[EditedFrame] = field(default_factory=list)
    rejected: list[tuple[EditPlan, str]] = field(default_factory=list)
    failed: list[tuple[EditPlan, str]] = field(default_factory=list)


def variant_indices(plans: list[EditPlan]) -> list[int]:
    """Position of each plan among the plans of its own operation."""
    counts: dict = {}
    out = []
    for p in plans:
        out.append(counts.get(p.operation, 0))
        counts[p.operation] = out[-1] + 1
    return out


def edit_frame(frame, scene: SceneGraph, config: PlannerConfig, root_seed: int, backends, textures) -> FrameEdits:
    """Plan and execute every edit for one frame; safety rejections are recorded, not raised."""
    result = FrameEdits(frame.frame_id)
    result.plans = plan_edits(scene, config, frame_seed(root_seed, frame.frame_id))
    for plan, variant in zip(result.plans, variant_indices(result.plans)):
        try:
            result.edited.append(apply_plan(frame, scene, plan, backends, textures, variant))
        except UnsafeEditError as exc:
            result.rejected.append((plan, exc.verdict.value))
        except BackendError as exc:
            log.error("frame %s plan %s: backend failure: %s", frame.frame_id, plan.plan_hash, exc)
            result.failed.append((plan, str(exc)))
    return result
