"""scikit-learn style wrappers so the pipeline composes with ``Pipeline``,
``clone`` and ``get_params``/``set_params``.

All three are stateless transformers in practice: ``fit`` only validates
parameters and backends and records the resolved configuration.
"""

from __future__ import annotations

from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .backends.registry import BackendSet
from .editors import apply_plan
from .pipeline import edit_frame
from .planner import PlannerConfig, frame_seed, plan_edits
from .scene import LARGE_OBJECT_THRESHOLD, TargetNotFound, build_scene_graph
from .textures import TextureStore
from .validation import check_seed


def _check_frames(X) -> list:
    frames = list(X)
    for fr in frames:
        if not all(hasattr(fr, a) for a in ("frame_id", "image", "instruction")):
            raise TypeError(f"expected DemonstrationFrame-like objects, got {type(fr).__name__}")
    return frames


class SceneDecomposer(TransformerMixin, BaseEstimator):
    """Frames -> scene graphs (``None`` where no target could be found)."""

    def __init__(self, detector=None, segmenter=None, size_threshold=LARGE_OBJECT_THRESHOLD):
        self.detector = detector
        self.segmenter = segmenter
        self.size_threshold = size_threshold

    def fit(self, X=None, y=None):
        if self.detector is None or self.segmenter is None:
            raise ValueError("SceneDecomposer needs both a detector and a segmenter")
        if not 0.0 < self.size_threshold <= 1.0:
            raise ValueError(f"size_threshold must lie in (0, 1], got {self.size_threshold}")
        self.backends_ = {
            "detector": self.detector.descriptor.to_dict(),
            "segmenter": self.segmenter.descriptor.to_dict(),
        }
        return self

    def decompose(self, frame):
        check_is_fitted(self)
        return build_scene_graph(frame, self.detector, self.segmenter, self.size_threshold)

    def transform(self, X):
        out = []
        for frame in _check_frames(X):
            try:
                out.append(self.decompose(frame))
            except TargetNotFound:
                out.append(None)
        return out


class EditPlanner(BaseEstimator):
    """Scene graphs -> lists of edit plans, seeded per frame from ``random_state``."""

    def __init__(
        self,
        variants_per_operation=2,
        operations=("remove", "restyle", "replace"),
        dil=None,
        strategy_mix=0.5,
        texture_ids=(),
        surface="table",
        random_state=0,
    ):
        self.variants_per_operation = variants_per_operation
        self.operations = operations
        self.dil = dil
        self.strategy_mix = strategy_mix
        self.texture_ids = texture_ids
        self.surface = surface
        self.random_state = random_state

    def fit(self, X=None, y=None):
        kw = dict(
            variants_per_operation=self.variants_per_operation,
            operations=tuple(self.operations),
            strategy_mix=self.strategy_mix,
            texture_ids=tuple(self.texture_ids),
            surface=self.surface,
        )
        if self.dil is not None:
            kw["dil"] = {**PlannerConfig().dil, **self.dil}
        self.config_ = PlannerConfig(**kw)
        self.seed_ = check_seed(self.random_state)
        return self

    def plan(self, scene):
        check_is_fitted(self)
        return plan_edits(scene, self.config_, frame_seed(self.seed_, scene.frame_id))

    def transform(self, X):
        return [None if scene is None else self.plan(scene) for scene in X]

    def fit_transform(self, X, y=None):
        return self.fit(X).transform(X)


class DistractorAugmenter(TransformerMixin, BaseEstimator):
    """Frames -> edited frames: decompose, plan, edit.

    ``transform`` returns the flat list of accepted edits; per-frame detail
    (rejections, skips) is available from :meth:`augment`.
    """

    def __init__(
        self,
        backends: BackendSet | None = None,
        textures: TextureStore | None = None,
        variants_per_operation=2,
        operations=("remove", "restyle", "replace"),
        dil=None,
        strategy_mix=0.5,
        size_threshold=LARGE_OBJECT_THRESHOLD,
        random_state=0,
    ):
        self.backends = backends
        self.textures = textures
        self.variants_per_operation = variants_per_operation
        self.operations = operations
        self.dil = dil
        self.strategy_mix = strategy_mix
        self.size_threshold = size_threshold
        self.random_state = random_state

    def fit(self, X=None, y=None):
        if self.backends is None:
            raise ValueError("DistractorAugmenter needs a BackendSet")
        self.textures_ = self.textures if self.textures is not None else TextureStore.builtin()
        self.decomposer_ = SceneDecomposer(self.backends.detector, self.backends.segmenter, self.size_threshold).fit()
        self.planner_ = EditPlanner(
            self.variants_per_operation,
            self.operations,
            self.dil,
            self.strategy_mix,
            self.textures_.ids(),
            random_state=self.random_state,
        ).fit()
        return self

    def augment(self, frame):
        """Edits for one frame, or ``None`` if it has no identifiable target."""
        check_is_fitted(self)
        try:
            scene = self.decomposer_.decompose(frame)
        except TargetNotFound:
            return None
        return edit_frame(frame, scene, self.planner_.config_, self.planner_.seed_, self.backends, self.textures_)

    def transform(self, X):
        edited = []
        for frame in _check_frames(X):
            result = self.augment(frame)
            if result is not None:
                edited.extend(result.edited)
        return edited

    def replay(self, frame, scene, plan, variant_index=0):
        """Re-run a stored plan; deterministic up to backend output."""
        check_is_fitted(self)
        return apply_plan(frame, scene, plan, self.backends, self.textures_, variant_index)
