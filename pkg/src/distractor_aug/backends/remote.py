"""HTTP clients for model services speaking the ``/v1/*`` JSON protocol."""

from __future__ import annotations

import logging
import threading
import time
from typing import Callable

import httpx
import numpy as np

from ..validation import check_image, check_mask
from . import wire
from .base import (
    SIZE_CLASSES,
    BackendDescriptor,
    BackendError,
    BackendKind,
    RetriesExhausted,
    Suggestion,
    SuggestionError,
    objects_from_records,
)

log = logging.getLogger(__name__)

DEFAULT_MIN_SCORE = 0.3


class ServiceClient:
    """POSTs JSON to one service, retrying transient failures.

    5xx responses and transport errors are retried with exponential backoff
    (``base_delay * factor**k``) up to ``max_attempts`` total attempts; 4xx
    responses fail immediately. At most ``max_in_flight`` requests run at
    once per client.
    """

    def __init__(
        self,
        endpoint: str,
        *,
        timeout: float = 60.0,
        max_attempts: int = 3,
        base_delay: float = 0.5,
        factor: float = 2.0,
        max_in_flight: int = 4,
        sleep: Callable[[float], None] = time.sleep,
        transport: httpx.BaseTransport | None = None,
    ):
        if max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")
        self.endpoint = endpoint.rstrip("/")
        self.max_attempts = max_attempts
        self.base_delay = base_delay
        self.factor = factor
        self._sleep = sleep
        self._slots = threading.BoundedSemaphore(max_in_flight)
        self._http = httpx.Client(timeout=timeout, transport=transport)

    def close(self):
        self._http.close()

    def post(self, path: str, body: dict) -> dict:
        url = self.endpoint + path
        last = None
        for attempt in range(1, self.max_attempts + 1):
            try:
                with self._slots:
                    resp = self._http.post(url, json=body)
            except httpx.TransportError as exc:
                last = f"transport error: {exc}"
            else:
                if resp.status_code < 400:
                    return resp.json()
                code, message = _error_fields(resp)
                if resp.status_code < 500:
                    if code == "no_suggestion":
                        raise SuggestionError(message)
                    raise BackendError(f"{url} -> {resp.status_code}: {message}", retriable=False, code=code)
                last = f"HTTP {resp.status_code}: {message}"
            if attempt < self.max_attempts:
                delay = self.base_delay * self.factor ** (attempt - 1)
                log.warning("%s failed (%s), retry %d in %.2fs", url, last, attempt, delay)
                self._sleep(delay)
        raise RetriesExhausted(f"{url} failed after {self.max_attempts} attempts ({last})", self.max_attempts)


def _error_fields(resp: httpx.Response) -> tuple[str | None, str]:
    try:
        err = resp.json()["error"]
        return err.get("code"), err.get("message", "")
    except Exception:
        return None, resp.text[:200]


class _RemoteBackend:
    kind: BackendKind

    def __init__(self, endpoint: str, *, version: str = "unknown", client: ServiceClient | None = None, **client_kw):
        self.client = client or ServiceClient(endpoint, **client_kw)
        self.descriptor = BackendDescriptor(self.kind, f"remote-{self.kind.value}", version, endpoint=endpoint, remote=True)


class RemoteDetector(_RemoteBackend):
    kind = BackendKind.DETECTOR

    def __init__(self, endpoint, *, min_score: float = DEFAULT_MIN_SCORE, **kw):
        super().__init__(endpoint, **kw)
        self.min_score = min_score

    def detect(self, image, prompt=None, *, frame_id=None):
        image = check_image(image)
        body = {"image": wire.encode_image(image)}
        if prompt:
            body["prompt"] = prompt
        try:
            resp = self.client.post(wire.ENDPOINTS["detect"], body)
        except BackendError as exc:
            raise exc.with_frame(frame_id) if frame_id else exc
        return objects_from_records(resp["objects"], image.shape[:2], self.min_score)


class RemoteSegmenter(_RemoteBackend):
    kind = BackendKind.SEGMENTER

    def segment(self, image, boxes):
        image = check_image(image)
        if not boxes:
            return []
        body = {"image": wire.encode_image(image), "boxes": [b.to_dict() for b in boxes]}
        masks = self.client.post(wire.ENDPOINTS["segment"], body)["masks"]
        if len(masks) != len(boxes):
            raise BackendError(f"segmenter returned {len(masks)} masks for {len(boxes)} boxes", retriable=False)
        return [(wire.decode_mask(m["rle"], image.shape[:2]), float(m["score"])) for m in masks]


def _decode_same_size(data: str, image: np.ndarray) -> np.ndarray:
    out = wire.decode_image(data)
    if out.shape != image.shape:
        raise BackendError(f"inpainter returned {out.shape}, expected {image.shape}", retriable=False)
    return out


class RemoteMaskInpainter(_RemoteBackend):
    kind = BackendKind.MASK_INPAINTER

    def inpaint(self, image, mask):
        image = check_image(image)
        mask = check_mask(mask, image.shape[:2])
        body = {"image": wire.encode_image(image), "mask_rle": wire.encode_mask(mask)}
        return _decode_same_size(self.client.post(wire.ENDPOINTS["inpaint"], body)["image"], image)


class RemotePromptedInpainter(_RemoteBackend):
    kind = BackendKind.PROMPTED_INPAINTER

    def inpaint(self, image, mask, prompt):
        image = check_image(image)
        mask = check_mask(mask, image.shape[:2])
        body = {"image": wire.encode_image(image), "mask_rle": wire.encode_mask(mask), "prompt": prompt}
        return _decode_same_size(self.client.post(wire.ENDPOINTS["inpaint"], body)["image"], image)


class RemoteSuggester(_RemoteBackend):
    kind = BackendKind.SUGGESTER

    def suggest(self, object_label, context=""):
        resp = self.client.post(wire.ENDPOINTS["suggest"], {"label": object_label, "context": context})
        size = resp.get("size_class", "")
        if size not in SIZE_CLASSES:
            raise SuggestionError(f"suggester returned unknown size class {size!r}")
        return Suggestion(resp["name"], resp.get("description", ""), size)


class RemoteFeatureExtractor(_RemoteBackend):
    kind = BackendKind.FEATURE_EXTRACTOR

    def __init__(self, endpoint, *, dim: int | None = None, **kw):
        super().__init__(endpoint, **kw)
        self.dim = dim

    def embed(self, images):
        body = {"images": [wire.encode_image(check_image(im)) for im in images]}
        feats = np.asarray(self.client.post(wire.ENDPOINTS["embed"], body)["features"], dtype=np.float64)
        if feats.shape[0] != len(images) or (len(images) and feats.ndim != 2):
            raise BackendError(f"embed returned shape {feats.shape} for {len(images)} images", retriable=False)
        if len(images):
            if self.dim is None:
                self.dim = feats.shape[1]
            elif feats.shape[1] != self.dim:
                raise BackendError(f"feature dim changed from {self.dim} to {feats.shape[1]}", retriable=False)
        return feats.reshape(len(images), -1) if len(images) else np.zeros((0, self.dim or 0))
