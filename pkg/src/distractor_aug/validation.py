"""Input validation helpers shared by every public entry point.

These mirror the ``sklearn.utils.validation`` style: each ``check_*`` takes a
loosely typed input, returns a normalised array, and raises ``ValueError``
with a readable message otherwise.
"""

from __future__ import annotations

import numpy as np

MIN_FRAME_SIZE = 64


def check_image(image, *, min_size: int = 1, name: str = "image") -> np.ndarray:
    """Return ``image`` as a contiguous ``uint8`` array of shape (H, W, 3)."""
    arr = np.asarray(image)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(f"{name} must have shape (H, W, 3), got {arr.shape}")
    if arr.dtype != np.uint8:
        if not np.issubdtype(arr.dtype, np.integer) or arr.min() < 0 or arr.max() > 255:
            raise ValueError(f"{name} must hold 8-bit channels, got dtype {arr.dtype}")
        arr = arr.astype(np.uint8)
    h, w = arr.shape[:2]
    if h < min_size or w < min_size:
        raise ValueError(f"{name} must be at least {min_size}x{min_size}, got {h}x{w}")
    return np.ascontiguousarray(arr)


def check_mask(mask, shape: tuple[int, int] | None = None, *, name: str = "mask") -> np.ndarray:
    """Return ``mask`` as a 2-D boolean array, optionally enforcing its shape."""
    arr = np.asarray(mask)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.shape[0] == 0 or arr.shape[1] == 0:
        raise ValueError(f"{name} must be non-empty, got shape {arr.shape}")
    if arr.dtype != bool:
        if arr.dtype == np.uint8 and not np.isin(arr, (0, 1, 255)).all():
            raise ValueError(f"{name} is not binary")
        arr = arr != 0
    if shape is not None and arr.shape != tuple(shape):
        raise ValueError(f"{name} has shape {arr.shape}, expected {tuple(shape)}")
    return arr


def check_same_shape(*masks: np.ndarray) -> tuple[int, int]:
    shapes = {m.shape[:2] for m in masks}
    if len(shapes) > 1:
        raise ValueError(f"dimension mismatch: {sorted(shapes)}")
    return next(iter(shapes))


def check_seed(seed) -> int:
    """Validate a 64-bit unsigned seed."""
    if isinstance(seed, (bool, np.bool_)) or not isinstance(seed, (int, np.integer)):
        raise TypeError(f"seed must be an integer, got {type(seed).__name__}")
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return seed


def check_probability(value: float, name: str) -> float:
    value = float(value)
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {value}")
    return value
