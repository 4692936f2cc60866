"""Encoding helpers for the JSON-over-HTTP backend protocol.

Images travel as base64 PNG, masks as row-major run lengths.
"""

from __future__ import annotations

import base64
import io

import numpy as np
from PIL import Image

from ..masks import rle_decode, rle_encode

ENDPOINTS = {
    "detect": "/v1/detect",
    "segment": "/v1/segment",
    "inpaint": "/v1/inpaint",
    "suggest": "/v1/suggest",
    "embed": "/v1/embed",
}


def encode_image(image: np.ndarray) -> str:
    buf = io.BytesIO()
    Image.fromarray(np.asarray(image, dtype=np.uint8)).save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


def decode_image(data: str) -> np.ndarray:
    with Image.open(io.BytesIO(base64.b64decode(data))) as im:
        return np.asarray(im.convert("RGB")).copy()


def encode_mask(mask: np.ndarray) -> list[int]:
    return rle_encode(mask)


def decode_mask(runs, shape) -> np.ndarray:
    return rle_decode(runs, shape)


def error_body(code: str, message: str) -> dict:
    return {"error": {"code": code, "message": message}}
