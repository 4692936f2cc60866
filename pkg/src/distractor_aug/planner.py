"""Seeded, serialisable edit plans.

A root seed expands into one seed per (operation, variant) slot via
``numpy.random.SeedSequence`` spawn keys, so raising the variant count
never changes the plans that were already there.
"""

from __future__ import annotations

import enum
import hashlib
import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .masks import default_dil
from .validation import check_probability, check_seed

MAX_VARIANTS = 64


class Operation(str, enum.Enum):
    REMOVE = "remove"
    RESTYLE = "restyle"
    REPLACE = "replace"


# fixed slot numbers; part of the seed derivation, never reorder
_OP_SLOT = {Operation.REMOVE: 0, Operation.RESTYLE: 1, Operation.REPLACE: 2}

DEFAULT_ADJECTIVES = (
    "red", "green", "blue", "yellow", "orange", "purple", "pink", "brown", "black", "white", "gray",
    "wooden", "metal", "plastic", "ceramic", "glass", "striped", "polka-dot",
)


class NoCandidatesWarning(UserWarning):
    pass


@dataclass(frozen=True)
class HsvJitter:
    hue_shift: float = 0.0
    saturation_scale: float = 1.0
    value_scale: float = 1.0

    def __post_init__(self):
        if not -0.5 <= self.hue_shift < 0.5:
            raise ValueError(f"hue_shift must lie in [-0.5, 0.5), got {self.hue_shift}")
        if self.saturation_scale <= 0 or self.value_scale <= 0:
            raise ValueError("saturation_scale and value_scale must be positive")

    @property
    def is_identity(self) -> bool:
        return self.hue_shift == 0 and self.saturation_scale == 1 and self.value_scale == 1

    def to_dict(self) -> dict:
        return {"hue_shift": self.hue_shift, "saturation_scale": self.saturation_scale, "value_scale": self.value_scale}


@dataclass
class PlannerConfig:
    variants_per_operation: int = 2
    operations: tuple[str, ...] = ("remove", "restyle", "replace")
    # None means "scale 7 px at 640 wide to the frame width"
    dil: dict = field(default_factory=lambda: {"remove": None, "restyle": 0, "replace": None})
    strategy_mix: float = 0.5
    texture_ids: tuple[str, ...] = ()
    hue_range: tuple[float, float] = (-0.1, 0.1)
    scale_range: tuple[float, float] = (0.7, 1.3)
    adjectives: tuple[str, ...] = DEFAULT_ADJECTIVES
    surface: str = "table"
    max_variants: int = MAX_VARIANTS

    def __post_init__(self):
        self.operations = tuple(Operation(op).value for op in self.operations)
        if not 0 <= self.variants_per_operation <= self.max_variants:
            raise ValueError(f"variants_per_operation must lie in [0, {self.max_variants}], got {self.variants_per_operation}")
        check_probability(self.strategy_mix, "strategy_mix")
        lo, hi = self.hue_range
        if not -0.5 <= lo <= hi < 0.5:
            raise ValueError(f"bad hue_range {self.hue_range}")
        lo, hi = self.scale_range
        if not 0 < lo <= hi:
            raise ValueError(f"bad scale_range {self.scale_range}")
        for op, value in self.dil.items():
            Operation(op)
            if value is not None and (int(value) != value or value < 0):
                raise ValueError(f"dil for {op} must be a non-negative integer or None")
        if Operation.RESTYLE.value in self.operations and self.variants_per_operation and not self.texture_ids:
            raise ValueError("restyle is enabled but no texture_ids are configured")
        if Operation.REPLACE.value in self.operations and not self.adjectives:
            raise ValueError("replace needs at least one adjective")

    def dil_for(self, operation: str, width: int) -> int:
        value = self.dil.get(Operation(operation).value)
        return default_dil(width) if value is None else int(value)


def canonical_json(payload) -> str:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


@dataclass(frozen=True)
class EditPlan:
    operation: Operation
    object_ids: tuple[int, ...]
    seed: int
    dil: int
    op_params: dict = field(default_factory=dict)
    plan_hash: str = field(init=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "operation", Operation(self.operation))
        object.__setattr__(self, "object_ids", tuple(int(i) for i in self.object_ids))
        object.__setattr__(self, "seed", check_seed(self.seed))
        if self.dil < 0:
            raise ValueError("dil must be non-negative")
        if len(set(self.object_ids)) != len(self.object_ids):
            raise ValueError(f"duplicate object ids {self.object_ids}")
        if self.operation is Operation.REPLACE and len(self.object_ids) != 1:
            raise ValueError(f"replace edits exactly one object, got {len(self.object_ids)}")
        object.__setattr__(self, "plan_hash", plan_hash(self))

    def body(self) -> dict:
        """All fields except the hash, in JSON-ready form."""
        return {
            "operation": self.operation.value,
            "object_ids": list(self.object_ids),
            "seed": self.seed,
            "dil": int(self.dil),
            "op_params": self.op_params,
        }

    def to_dict(self) -> dict:
        return {**self.body(), "plan_hash": self.plan_hash}

    def to_json(self) -> str:
        return canonical_json(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "EditPlan":
        plan = cls(d["operation"], d["object_ids"], d["seed"], d["dil"], d.get("op_params", {}))
        if "plan_hash" in d and d["plan_hash"] != plan.plan_hash:
            raise ValueError(f"plan hash mismatch: stored {d['plan_hash']}, computed {plan.plan_hash}")
        return plan

    @property
    def jitter(self) -> HsvJitter:
        return HsvJitter(**self.op_params["jitter"])


def plan_hash(plan: EditPlan) -> str:
    """First 16 hex digits of the SHA-256 of the plan's canonical JSON body."""
    return hashlib.sha256(canonical_json(plan.body()).encode("ascii")).hexdigest()[:16]


def slot_seed(seed: int, operation: str, variant: int) -> int:
    ss = np.random.SeedSequence(check_seed(seed), spawn_key=(_OP_SLOT[Operation(operation)], variant))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _uniform(rng: np.random.Generator, lo: float, hi: float) -> float:
    return round(float(rng.uniform(lo, hi)), 6) if hi > lo else float(lo)


def _sample_plan(op: Operation, candidate_ids: list[int], seed: int, dil: int, config: PlannerConfig) -> EditPlan:
    rng = np.random.default_rng(seed)
    if op is Operation.REPLACE:
        ids = [candidate_ids[rng.integers(len(candidate_ids))]]
    else:
        k = int(rng.integers(0, len(candidate_ids) + 1))
        ids = sorted(int(i) for i in rng.choice(candidate_ids, size=k, replace=False)) if k else []
    params: dict = {}
    if op is Operation.RESTYLE:
        textures = sorted(config.texture_ids)
        jitter = HsvJitter(
            _uniform(rng, *config.hue_range),
            _uniform(rng, *config.scale_range),
            _uniform(rng, *config.scale_range),
        )
        params = {"texture_id": textures[rng.integers(len(textures))], "jitter": jitter.to_dict()}
    elif op is Operation.REPLACE:
        suggested = bool(rng.random() < config.strategy_mix)
        params = {
            "strategy": "suggested" if suggested else "same_category",
            "adjective": config.adjectives[rng.integers(len(config.adjectives))],
            "surface": config.surface,
        }
    return EditPlan(op, ids, seed, dil, params)


def plan_edits(scene, config: PlannerConfig, seed: int) -> list[EditPlan]:
    """Sample ``variants_per_operation`` plans for each enabled operation.

    Remove and restyle pick a subset whose size is uniform over 0..n
    (n = number of candidates), then that many distinct candidates. Replace
    picks exactly one candidate and is skipped, with a warning, when there
    are none. Output is a pure function of (scene, config, seed).
    """
    seed = check_seed(seed)
    candidate_ids = scene.candidate_ids
    width = scene.image_size[1]
    plans = []
    for op in map(Operation, config.operations):
        if op is Operation.REPLACE and not candidate_ids:
            if config.variants_per_operation:
                warnings.warn(f"frame {scene.frame_id}: no candidates, replace plans omitted", NoCandidatesWarning, stacklevel=2)
            continue
        dil = config.dil_for(op.value, width)
        for variant in range(config.variants_per_operation):
            plans.append(_sample_plan(op, candidate_ids, slot_seed(seed, op.value, variant), dil, config))
    return plans


def frame_seed(root_seed: int, frame_id: str) -> int:
    """Per-frame seed derived from the run seed and a stable digest of the frame id."""
    digest = hashlib.sha256(frame_id.encode("utf-8")).digest()
    ss = np.random.SeedSequence([check_seed(root_seed), int.from_bytes(digest[:8], "little")])
    return int(ss.generate_state(1, dtype=np.uint64)[0])
