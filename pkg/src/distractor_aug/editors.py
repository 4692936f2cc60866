"""Execute edit plans on a frame.

Every editor composites the backend output back through the recorded edit
region, so pixels outside it are byte-identical to the source whatever the
backend does.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass

import numpy as np
from matplotlib.colors import hsv_to_rgb, rgb_to_hsv

from .backends.base import BackendError, SuggestionError
from .frames import DemonstrationFrame, EditedFrame
from .masks import SafetyVerdict, check_edit_safety, dilate, union
from .planner import DEFAULT_ADJECTIVES, EditPlan, HsvJitter, Operation
from .textures import TextureStore

log = logging.getLogger(__name__)

# share of the original luminance kept when compositing a texture
LUMA_KEEP = 0.6

# RGB -> YCbCr (BT.601 full range); Y matches the SSIM luminance weights
_YCC = np.array(
    [
        [0.299, 0.587, 0.114],
        [-0.168736, -0.331264, 0.5],
        [0.5, -0.418688, -0.081312],
    ]
)
_YCC_INV = np.linalg.inv(_YCC)

SIZE_BANDS = ((0.02, "small"), (0.08, "medium"))


class UnsafeEditError(ValueError):
    """The plan would touch the target or obstruct the recorded trajectory."""

    def __init__(self, verdict: SafetyVerdict, plan: EditPlan):
        super().__init__(f"{plan.operation.value} plan {plan.plan_hash} rejected: {verdict.value}")
        self.verdict = verdict
        self.plan = plan


@dataclass(frozen=True)
class ReplacementPrompt:
    object_name: str
    object_description: str
    surface_description: str
    rendered_prompt: str

    def __post_init__(self):
        if not self.rendered_prompt.strip():
            raise ValueError("rendered_prompt must be non-empty")
        if self.object_name not in self.rendered_prompt:
            raise ValueError("rendered_prompt must contain the object name")

    @classmethod
    def render(cls, object_name: str, surface: str, description: str = "") -> "ReplacementPrompt":
        text = f"{_article(object_name)} {object_name} on {_article(surface)} {surface}"
        if description and description.lower().strip(" .") not in text.lower():
            text = f"{text}, {description}"
        return cls(object_name, description, surface, text)

    def to_dict(self) -> dict:
        return {
            "object_name": self.object_name,
            "object_description": self.object_description,
            "surface_description": self.surface_description,
            "rendered_prompt": self.rendered_prompt,
        }


def _article(word: str) -> str:
    return "an" if word[:1].lower() in "aeiou" else "a"


def size_class(bbox, image_size: tuple[int, int]) -> str:
    """Bucket a box by the share of the image it covers."""
    frac = bbox.area / (image_size[0] * image_size[1])
    for limit, name in SIZE_BANDS:
        if frac < limit:
            return name
    return "large"


def _selected(scene, plan: EditPlan):
    allowed = set(scene.candidate_ids)
    bad = [i for i in plan.object_ids if i not in allowed]
    if bad:
        raise ValueError(f"plan selects non-candidate objects {bad} in frame {scene.frame_id}")
    return [scene.get(i) for i in plan.object_ids]


def edit_region(scene, plan: EditPlan) -> np.ndarray:
    """dilate(union of the selected masks, plan.dil)."""
    masks = [o.mask for o in _selected(scene, plan)]
    return dilate(union(masks, scene.image_size), plan.dil)


def _check(frame: DemonstrationFrame, scene, plan: EditPlan, region: np.ndarray) -> None:
    if frame.size != tuple(scene.image_size):
        raise ValueError(f"frame is {frame.size} but scene graph is {scene.image_size}")
    verdict = check_edit_safety(region, scene.target.mask, frame.trajectory_footprint, plan.operation.value)
    if verdict is not SafetyVerdict.OK:
        raise UnsafeEditError(verdict, plan)


def _composite(source: np.ndarray, generated: np.ndarray, region: np.ndarray) -> np.ndarray:
    generated = np.asarray(generated)
    if generated.shape != source.shape:
        raise BackendError(f"backend returned shape {generated.shape}, expected {source.shape}", retriable=False)
    out = source.copy()
    out[region] = generated[region]
    return out


def _result(frame, plan, image, region, variant_index, info) -> EditedFrame:
    info = {"dil": plan.dil, "seed": plan.seed, **info}
    return EditedFrame(frame.frame_id, image, plan, variant_index, region, info, frame.state, frame.action)


def _expect(plan: EditPlan, op: Operation) -> None:
    if plan.operation is not op:
        raise ValueError(f"expected a {op.value} plan, got {plan.operation.value}")


def remove_objects(frame, scene, plan, inpainter, variant_index: int = 0) -> EditedFrame:
    """Erase the selected objects and let ``inpainter`` rebuild the background."""
    _expect(plan, Operation.REMOVE)
    region = edit_region(scene, plan)
    _check(frame, scene, plan, region)
    info = {"labels": [scene.get(i).label for i in plan.object_ids], "backends": {}}
    if not region.any():
        return _result(frame, plan, frame.image.copy(), region, variant_index, info)
    generated = inpainter.inpaint(frame.image, region)
    info["backends"]["mask_inpainter"] = inpainter.descriptor.to_dict()
    return _result(frame, plan, _composite(frame.image, generated, region), region, variant_index, info)


def _tile(texture: np.ndarray, h: int, w: int) -> np.ndarray:
    th, tw = texture.shape[:2]
    return np.tile(texture, (-(-h // th), -(-w // tw), 1))[:h, :w]


def apply_hsv_jitter(pixels: np.ndarray, jitter: HsvJitter) -> np.ndarray:
    """Shift hue and scale saturation and value of an (N, 3) uint8 pixel array."""
    if jitter.is_identity or len(pixels) == 0:
        return pixels.copy()
    hsv = rgb_to_hsv(pixels.astype(np.float64) / 255.0)
    hsv[:, 0] = (hsv[:, 0] + jitter.hue_shift) % 1.0
    hsv[:, 1] = np.clip(hsv[:, 1] * jitter.saturation_scale, 0.0, 1.0)
    hsv[:, 2] = np.clip(hsv[:, 2] * jitter.value_scale, 0.0, 1.0)
    return np.clip(np.rint(hsv_to_rgb(hsv) * 255.0), 0, 255).astype(np.uint8)


def texture_composite(original: np.ndarray, texture: np.ndarray, keep: float = LUMA_KEEP) -> np.ndarray:
    """Chroma from ``texture``; luminance ``keep*orig + (1-keep)*texture``. Both (N, 3) uint8."""
    o = original.astype(np.float64) @ _YCC.T
    t = texture.astype(np.float64) @ _YCC.T
    mixed = t.copy()
    mixed[:, 0] = keep * o[:, 0] + (1.0 - keep) * t[:, 0]
    return np.clip(np.rint(mixed @ _YCC_INV.T), 0, 255).astype(np.uint8)


def restyle_objects(frame, scene, plan, textures: TextureStore, variant_index: int = 0) -> EditedFrame:
    """Re-texture the selected objects inside their own (undilated) masks.

    The texture is tiled from each object's bbox corner, composited so its
    chroma replaces the object's while most of the original shading is
    kept, and the plan's HSV jitter is applied on top. Masks, and so shape
    and pose, are untouched.
    """
    _expect(plan, Operation.RESTYLE)
    objects = _selected(scene, plan)
    region = edit_region(scene, plan)
    _check(frame, scene, plan, region)
    texture = textures[plan.op_params["texture_id"]]
    jitter = plan.jitter
    out = frame.image.copy()
    painted = np.zeros(scene.image_size, dtype=bool)
    for obj in objects:
        b = obj.bbox
        local = obj.mask[b.y : b.y + b.h, b.x : b.x + b.w]
        tile = _tile(texture.image, b.h, b.w)[local]
        window = out[b.y : b.y + b.h, b.x : b.x + b.w]
        window[local] = texture_composite(frame.image[b.y : b.y + b.h, b.x : b.x + b.w][local], tile)
        painted |= obj.mask
    out[painted] = apply_hsv_jitter(out[painted], jitter)
    info = {
        "labels": [o.label for o in objects],
        "texture": {"texture_id": texture.texture_id, "category": texture.category},
        "jitter": jitter.to_dict(),
        "luma_keep": LUMA_KEEP,
        "backends": {},
    }
    return _result(frame, plan, out, region, variant_index, info)


def scene_context(scene, surface: str) -> str:
    others = sorted({o.label for o in scene.candidates} | {scene.target.label})
    return f"objects on a {surface}: {', '.join(others)}"


def same_category_name(label: str, adjective: str, vocabulary=DEFAULT_ADJECTIVES) -> str:
    """Prefix ``label`` with ``adjective``, dropping any appearance words it already has."""
    vocab = {w.lower() for w in vocabulary}
    words = [w for w in label.split() if re.sub(r"[^a-z-]", "", w.lower()) not in vocab]
    return " ".join([adjective, *(words or label.split())])


def replace_object(frame, scene, plan, inpainter, suggester=None, variant_index: int = 0) -> EditedFrame:
    """Swap one object for a newly generated one inside its dilated mask.

    ``same_category`` keeps the label and changes its appearance adjective;
    ``suggested`` asks ``suggester`` for a different household object of the
    same size class. An unusable suggestion falls back to ``same_category``
    and is flagged in ``info["warnings"]``.
    """
    _expect(plan, Operation.REPLACE)
    (obj,) = _selected(scene, plan)
    region = edit_region(scene, plan)
    _check(frame, scene, plan, region)
    params = plan.op_params
    surface = params.get("surface", "table")
    strategy = params.get("strategy", "same_category")
    warnings_: list[str] = []
    backends = {"prompted_inpainter": inpainter.descriptor.to_dict()}
    prompt = None
    if strategy == "suggested":
        if suggester is None:
            warnings_.append("suggestion_fallback: no suggester configured")
        else:
            backends["suggester"] = suggester.descriptor.to_dict()
            wanted = size_class(obj.bbox, scene.image_size)
            try:
                s = suggester.suggest(obj.label, scene_context(scene, surface))
            except SuggestionError as exc:
                warnings_.append(f"suggestion_fallback: {exc}")
            else:
                if not s.name.strip():
                    warnings_.append("suggestion_fallback: empty suggestion")
                elif s.size_class != wanted:
                    warnings_.append(f"suggestion_fallback: {s.name!r} is {s.size_class}, original is {wanted}")
                else:
                    prompt = ReplacementPrompt.render(s.name.strip(), surface, s.description)
    if prompt is None:
        name = same_category_name(obj.label, params.get("adjective", "red"))
        prompt = ReplacementPrompt.render(name, surface)
    for w in warnings_:
        log.warning("frame %s plan %s: %s", frame.frame_id, plan.plan_hash, w)
    generated = inpainter.inpaint(frame.image, region, prompt.rendered_prompt)
    info = {
        "labels": [obj.label],
        "strategy": strategy,
        "strategy_used": "suggested" if strategy == "suggested" and not warnings_ else "same_category",
        "prompt": prompt.to_dict(),
        "warnings": warnings_,
        "backends": backends,
    }
    return _result(frame, plan, _composite(frame.image, generated, region), region, variant_index, info)


def apply_plan(frame, scene, plan, backends, textures: TextureStore | None = None, variant_index: int = 0) -> EditedFrame:
    """Dispatch ``plan`` to its editor. ``backends`` is a :class:`BackendSet`."""
    if plan.operation is Operation.REMOVE:
        return remove_objects(frame, scene, plan, backends.mask_inpainter, variant_index)
    if plan.operation is Operation.RESTYLE:
        if textures is None:
            raise ValueError("restyle plans need a texture store")
        return restyle_objects(frame, scene, plan, textures, variant_index)
    return replace_object(frame, scene, plan, backends.prompted_inpainter, backends.suggester, variant_index)
