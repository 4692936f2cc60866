"""Pipeline configuration file (YAML or JSON).

Example::

    backends: stub               # or "remote"
    endpoints:                   # remote only; NICE_ENDPOINT_<ROLE> overrides
      detector: http://gpu-box:8000
    min_score: 0.3
    backend_options: {timeout: 60, max_in_flight: 4}
    size_threshold: 0.4
    textures: ./textures         # directory with index.json; builtin patterns if unset
    seed: 0
    workers: 4
    planner:
      variants_per_operation: 2
      operations: [remove, restyle, replace]
      dil: {remove: null, restyle: 0, replace: null}
      strategy_mix: 0.5
      surface: table
    ssim: {window: 11}
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from pathlib import Path

import yaml

from .backends.registry import ROLES, BackendSet, remote_backends, resolve_endpoints, stub_backends
from .planner import PlannerConfig
from .scene import LARGE_OBJECT_THRESHOLD
from .textures import TextureStore


class ConfigError(ValueError):
    pass


@dataclass
class PipelineConfig:
    backends: str = "stub"
    endpoints: dict = field(default_factory=dict)
    min_score: float = 0.3
    backend_options: dict = field(default_factory=dict)
    size_threshold: float = LARGE_OBJECT_THRESHOLD
    textures: str | None = None
    seed: int | None = None
    workers: int = 1
    planner: dict = field(default_factory=dict)
    ssim: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.backends not in ("stub", "remote"):
            raise ConfigError(f"backends must be 'stub' or 'remote', got {self.backends!r}")
        unknown = set(self.endpoints) - set(ROLES)
        if unknown:
            raise ConfigError(f"unknown endpoint roles {sorted(unknown)}")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    def validate_paths(self) -> None:
        if self.textures and not (Path(self.textures) / "index.json").exists():
            raise ConfigError(f"texture store {self.textures} has no index.json")

    def texture_store(self) -> TextureStore:
        return TextureStore.from_directory(self.textures) if self.textures else TextureStore.builtin()

    def planner_config(self, textures: TextureStore | None = None, **overrides) -> PlannerConfig:
        kw = dict(self.planner)
        kw.update({k: v for k, v in overrides.items() if v is not None})
        for key in ("operations", "texture_ids", "hue_range", "scale_range", "adjectives"):
            if key in kw:
                kw[key] = tuple(kw[key])
        if "texture_ids" not in kw and textures is not None:
            kw["texture_ids"] = tuple(textures.ids())
        if "dil" in kw:
            kw["dil"] = {**PlannerConfig().dil, **kw["dil"]}
        try:
            return PlannerConfig(**kw)
        except TypeError as exc:
            raise ConfigError(f"bad planner section: {exc}") from None

    def build_backends(self, dataset_root: str | Path | None = None) -> BackendSet:
        if self.backends == "stub":
            if dataset_root is None:
                raise ConfigError("stub backends need a dataset root for detection sidecars")
            return stub_backends(Path(dataset_root) / "frames")
        endpoints = resolve_endpoints(self.endpoints)
        if not endpoints:
            raise ConfigError("remote backends selected but no endpoints configured")
        return remote_backends(endpoints, min_score=self.min_score, options=self.backend_options)


def load_config(path: str | Path | None) -> PipelineConfig:
    if path is None:
        return PipelineConfig()
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    except FileNotFoundError:
        raise ConfigError(f"config file {path} not found") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path} must hold a mapping")
    known = {f.name for f in fields(PipelineConfig)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}")
    return PipelineConfig(**data)
