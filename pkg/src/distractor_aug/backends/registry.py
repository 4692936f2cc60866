"""Bundles of backends, one per role, built from stub or remote settings."""

from __future__ import annotations

import os
from dataclasses import dataclass, fields
from pathlib import Path

from .remote import (
    RemoteDetector,
    RemoteFeatureExtractor,
    RemoteMaskInpainter,
    RemotePromptedInpainter,
    RemoteSegmenter,
    RemoteSuggester,
)
from .stubs import (
    AnnotationDetector,
    ColorHistogramExtractor,
    DictionarySuggester,
    FlatColorObject,
    RectMaskSegmenter,
    RingMeanFill,
)

ROLES = ("detector", "segmenter", "mask_inpainter", "prompted_inpainter", "suggester", "feature_extractor")
ENV_PREFIX = "NICE_ENDPOINT_"

_REMOTE = {
    "detector": RemoteDetector,
    "segmenter": RemoteSegmenter,
    "mask_inpainter": RemoteMaskInpainter,
    "prompted_inpainter": RemotePromptedInpainter,
    "suggester": RemoteSuggester,
    "feature_extractor": RemoteFeatureExtractor,
}


@dataclass
class BackendSet:
    detector: object = None
    segmenter: object = None
    mask_inpainter: object = None
    prompted_inpainter: object = None
    suggester: object = None
    feature_extractor: object = None

    def descriptors(self) -> dict:
        return {f.name: getattr(self, f.name).descriptor.to_dict() for f in fields(self) if getattr(self, f.name) is not None}


def stub_backends(sidecar_dir: str | Path) -> BackendSet:
    return BackendSet(
        detector=AnnotationDetector(sidecar_dir),
        segmenter=RectMaskSegmenter(),
        mask_inpainter=RingMeanFill(),
        prompted_inpainter=FlatColorObject(),
        suggester=DictionarySuggester(),
        feature_extractor=ColorHistogramExtractor(),
    )


def resolve_endpoints(endpoints: dict | None = None, environ=None) -> dict:
    """Config endpoints overridden by ``NICE_ENDPOINT_<ROLE>`` variables."""
    environ = os.environ if environ is None else environ
    out = dict(endpoints or {})
    for role in ROLES:
        value = environ.get(ENV_PREFIX + role.upper())
        if value:
            out[role] = value
    return out


def remote_backends(endpoints: dict, *, min_score: float = 0.3, options: dict | None = None) -> BackendSet:
    """Remote clients for every role with an endpoint; missing roles stay ``None``."""
    options = options or {}
    built = {}
    for role, url in endpoints.items():
        if role not in _REMOTE:
            raise ValueError(f"unknown backend role {role!r}")
        kw = dict(options)
        if role == "detector":
            kw["min_score"] = min_score
        built[role] = _REMOTE[role](url, **kw)
    return BackendSet(**built)
