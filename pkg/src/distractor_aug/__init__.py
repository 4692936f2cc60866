"""Distractor editing for robot demonstration images.

Decompose a frame into target and distractor objects, plan seeded edits
(remove, restyle, replace) that never touch the target, execute them
through pluggable model backends, and measure the results.
"""

from .dataset import load_dataset, save_edited, validate_dataset
from .editors import UnsafeEditError, apply_plan, remove_objects, replace_object, restyle_objects
from .estimators import DistractorAugmenter, EditPlanner, SceneDecomposer
from .frames import DemonstrationFrame, EditedFrame
from .masks import BBox, SafetyVerdict, check_edit_safety, dilate, overlap_fraction, union
from .metrics import apa, clutter_level, fid, fit_gaussian, frechet_distance, ssim
from .planner import EditPlan, PlannerConfig, plan_edits, plan_hash
from .scene import SceneGraph, TargetNotFound, build_scene_graph, filter_large_objects, identify_target, parse_objects

__version__ = "0.1.0"

__all__ = [
    "BBox",
    "DemonstrationFrame",
    "DistractorAugmenter",
    "EditPlan",
    "EditPlanner",
    "EditedFrame",
    "PlannerConfig",
    "SafetyVerdict",
    "SceneDecomposer",
    "SceneGraph",
    "TargetNotFound",
    "UnsafeEditError",
    "apa",
    "apply_plan",
    "build_scene_graph",
    "check_edit_safety",
    "clutter_level",
    "dilate",
    "fid",
    "filter_large_objects",
    "fit_gaussian",
    "frechet_distance",
    "identify_target",
    "load_dataset",
    "overlap_fraction",
    "parse_objects",
    "plan_edits",
    "plan_hash",
    "remove_objects",
    "replace_object",
    "restyle_objects",
    "save_edited",
    "ssim",
    "union",
    "validate_dataset",
]
