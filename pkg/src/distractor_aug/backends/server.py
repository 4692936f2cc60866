"""A small threaded HTTP server exposing local backends over the wire protocol.

Used as the mock service in the conformance tests and handy for trying the
remote clients without real models. Supports injecting failures.
"""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np

from ..masks import BBox
from . import wire
from .base import BackendError, SuggestionError


class StubServer:
    def __init__(
        self,
        *,
        detector=None,
        segmenter=None,
        mask_inpainter=None,
        prompted_inpainter=None,
        suggester=None,
        feature_extractor=None,
        host: str = "127.0.0.1",
        port: int = 0,
    ):
        self.backends = {
            "detector": detector,
            "segmenter": segmenter,
            "mask_inpainter": mask_inpainter,
            "prompted_inpainter": prompted_inpainter,
            "suggester": suggester,
            "feature_extractor": feature_extractor,
        }
        self.requests: list[str] = []
        self._failures: list[int] = []
        self._lock = threading.Lock()
        self._httpd = ThreadingHTTPServer((host, port), self._handler_class())
        self._httpd.daemon_threads = True
        self._thread: threading.Thread | None = None

    @property
    def url(self) -> str:
        host, port = self._httpd.server_address[:2]
        return f"http://{host}:{port}"

    def fail_next(self, count: int, status: int = 503) -> None:
        """Answer the next ``count`` requests with ``status`` instead of serving them."""
        with self._lock:
            self._failures.extend([status] * count)

    def start(self) -> "StubServer":
        self._thread = threading.Thread(target=self._httpd.serve_forever, daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        self._httpd.shutdown()
        self._httpd.server_close()

    def __enter__(self):
        return self.start()

    def __exit__(self, *exc):
        self.stop()

    def _next_failure(self) -> int | None:
        with self._lock:
            return self._failures.pop(0) if self._failures else None

    def dispatch(self, path: str, body: dict) -> dict:
        b = self.backends
        if path == wire.ENDPOINTS["detect"]:
            image = wire.decode_image(body["image"])
            objs = self._need("detector").detect(image, body.get("prompt"))
            return {
                "objects": [
                    {**o.bbox.to_dict(), "label": o.label, "score": o.detection_confidence} for o in objs
                ]
            }
        if path == wire.ENDPOINTS["segment"]:
            image = wire.decode_image(body["image"])
            boxes = [BBox.from_dict(d) for d in body["boxes"]]
            results = self._need("segmenter").segment(image, boxes)
            return {"masks": [{"rle": wire.encode_mask(m), "score": float(s)} for m, s in results]}
        if path == wire.ENDPOINTS["inpaint"]:
            image = wire.decode_image(body["image"])
            mask = wire.decode_mask(body["mask_rle"], image.shape[:2])
            if body.get("prompt"):
                out = self._need("prompted_inpainter").inpaint(image, mask, body["prompt"])
            else:
                out = self._need("mask_inpainter").inpaint(image, mask)
            return {"image": wire.encode_image(out)}
        if path == wire.ENDPOINTS["suggest"]:
            s = self._need("suggester").suggest(body["label"], body.get("context", ""))
            return {"name": s.name, "description": s.description, "size_class": s.size_class}
        if path == wire.ENDPOINTS["embed"]:
            images = [wire.decode_image(d) for d in body["images"]]
            feats = np.asarray(self._need("feature_extractor").embed(images))
            return {"features": feats.tolist()}
        raise KeyError(path)

    def _need(self, role: str):
        backend = self.backends[role]
        if backend is None:
            raise LookupError(role)
        return backend

    def _handler_class(self):
        server = self

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, *args):
                pass

            def _send(self, status: int, payload: dict):
                data = json.dumps(payload).encode("utf-8")
                self.send_response(status)
                self.send_header("Content-Type", "application/json; charset=utf-8")
                self.send_header("Content-Length", str(len(data)))
                self.end_headers()
                self.wfile.write(data)

            def do_POST(self):
                with server._lock:
                    server.requests.append(self.path)
                length = int(self.headers.get("Content-Length", 0))
                raw = self.rfile.read(length)
                failure = server._next_failure()
                if failure is not None:
                    return self._send(failure, wire.error_body("injected", f"injected HTTP {failure}"))
                try:
                    body = json.loads(raw.decode("utf-8"))
                except ValueError as exc:
                    return self._send(400, wire.error_body("bad_json", str(exc)))
                try:
                    return self._send(200, server.dispatch(self.path, body))
                except KeyError as exc:
                    if self.path not in wire.ENDPOINTS.values():
                        return self._send(404, wire.error_body("not_found", self.path))
                    return self._send(400, wire.error_body("bad_request", f"missing field {exc}"))
                except LookupError as exc:
                    return self._send(501, wire.error_body("unavailable", f"no {exc} configured"))
                except SuggestionError as exc:
                    return self._send(404, wire.error_body("no_suggestion", str(exc)))
                except BackendError as exc:
                    status = 503 if exc.retriable else 400
                    return self._send(status, wire.error_body(exc.code or "backend_error", str(exc)))
                except ValueError as exc:
                    return self._send(400, wire.error_body("bad_request", str(exc)))
                except Exception as exc:  # noqa: BLE001 - surface as retriable
                    return self._send(500, wire.error_body("internal", repr(exc)))

        return Handler
