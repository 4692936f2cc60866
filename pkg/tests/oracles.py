"""Independent reference computations, deliberately naive."""

from __future__ import annotations

import numpy as np


def chebyshev_dilate(mask: np.ndarray, dil: int) -> np.ndarray:
    """Pixel is set iff some set pixel lies within Chebyshev distance ``dil``."""
    return chebyshev_distance_map(mask) <= dil


def offset_dilate(mask: np.ndarray, dil: int) -> np.ndarray:
    """OR of the mask shifted by every (dy, dx) in the (2*dil+1)^2 square."""
    h, w = mask.shape
    padded = np.pad(mask, dil)
    out = np.zeros_like(mask)
    for dy in range(2 * dil + 1):
        for dx in range(2 * dil + 1):
            out |= padded[dy : dy + h, dx : dx + w]
    return out


def chebyshev_distance_map(mask: np.ndarray) -> np.ndarray:
    h, w = mask.shape
    ys, xs = np.nonzero(mask)
    if ys.size == 0:
        return np.full((h, w), np.iinfo(np.int64).max)
    gy, gx = np.mgrid[:h, :w]
    dist = np.full((h, w), np.iinfo(np.int64).max, dtype=np.int64)
    for start in range(0, ys.size, 256):
        py, px = ys[start : start + 256], xs[start : start + 256]
        d = np.maximum(np.abs(gy[..., None] - py), np.abs(gx[..., None] - px)).min(axis=-1)
        dist = np.minimum(dist, d)
    return dist


def reference_ssim(a: np.ndarray, b: np.ndarray, window=11, k1=0.01, k2=0.03, L=255.0) -> float:
    """Loop over every full window and compute the SSIM formula from raw moments."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    c1, c2 = (k1 * L) ** 2, (k2 * L) ** 2
    h, w = a.shape
    vals = []
    for i in range(h - window + 1):
        for j in range(w - window + 1):
            x = a[i : i + window, j : j + window].ravel()
            y = b[i : i + window, j : j + window].ravel()
            mx, my = x.mean(), y.mean()
            vx = ((x - mx) ** 2).mean()
            vy = ((y - my) ** 2).mean()
            cxy = ((x - mx) * (y - my)).mean()
            vals.append(((2 * mx * my + c1) * (2 * cxy + c2)) / ((mx**2 + my**2 + c1) * (vx + vy + c2)))
    return float(np.mean(vals))


def univariate_frechet(mu1, var1, mu2, var2) -> float:
    return (mu1 - mu2) ** 2 + (np.sqrt(var1) - np.sqrt(var2)) ** 2


def random_psd(rng, d: int, rank: int | None = None) -> np.ndarray:
    a = rng.normal(size=(d, rank or d))
    return a @ a.T / (rank or d)
