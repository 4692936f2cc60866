"""Evaluation metrics: windowed SSIM, Fréchet distance between feature
Gaussians, and affordance-point accuracy grouped by clutter level."""

from __future__ import annotations

import enum
import json
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .masks import read_mask_png
from .validation import check_mask

LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114])
EIG_TOL = 1e-8
SYMMETRY_TOL = 1e-9


@dataclass(frozen=True)
class SsimParams:
    window: int = 11
    k1: float = 0.01
    k2: float = 0.03
    dynamic_range: float = 255.0

    def __post_init__(self):
        if self.window < 3 or self.window % 2 == 0:
            raise ValueError(f"window must be odd and >= 3, got {self.window}")
        if self.k1 <= 0 or self.k2 <= 0:
            raise ValueError("k1 and k2 must be positive")

    @property
    def c1(self) -> float:
        return (self.k1 * self.dynamic_range) ** 2

    @property
    def c2(self) -> float:
        return (self.k2 * self.dynamic_range) ** 2


def to_luma(image) -> np.ndarray:
    """Grayscale float image; RGB input goes through Y = .299R + .587G + .114B."""
    arr = np.asarray(image, dtype=np.float64)
    if arr.ndim == 3 and arr.shape[2] == 3:
        return arr @ LUMA_WEIGHTS
    if arr.ndim != 2:
        raise ValueError(f"expected a grayscale or RGB image, got shape {arr.shape}")
    return arr


def _window_means(x: np.ndarray, k: int) -> np.ndarray:
    """Mean over every fully contained k x k window, via a summed-area table."""
    s = np.zeros((x.shape[0] + 1, x.shape[1] + 1))
    s[1:, 1:] = x.cumsum(0).cumsum(1)
    return (s[k:, k:] - s[:-k, k:] - s[k:, :-k] + s[:-k, :-k]) / (k * k)


def ssim_map(a, b, params: SsimParams = SsimParams()) -> np.ndarray:
    """Per-window SSIM with a uniform window, over all fully contained windows.

    Window statistics use population (1/N) moments.
    """
    x, y = to_luma(a), to_luma(b)
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    k = params.window
    if min(x.shape) < k:
        raise ValueError(f"images {x.shape} are smaller than the {k}x{k} window")
    mx, my = _window_means(x, k), _window_means(y, k)
    vx = _window_means(x * x, k) - mx * mx
    vy = _window_means(y * y, k) - my * my
    cxy = _window_means(x * y, k) - mx * my
    c1, c2 = params.c1, params.c2
    num = (2 * mx * my + c1) * (2 * cxy + c2)
    den = (mx * mx + my * my + c1) * (vx + vy + c2)
    return num / den


def ssim(a, b, params: SsimParams = SsimParams()) -> float:
    """Mean SSIM over windows, in [-1, 1]."""
    return float(ssim_map(a, b, params).mean())


@dataclass(frozen=True, eq=False)
class GaussianSummary:
    mean: np.ndarray
    covariance: np.ndarray
    count: int

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64).reshape(-1)
        cov = np.atleast_2d(np.asarray(self.covariance, dtype=np.float64))
        d = mean.shape[0]
        if cov.shape != (d, d):
            raise ValueError(f"covariance shape {cov.shape} does not match mean dimension {d}")
        if self.count < 2:
            raise ValueError("a Gaussian summary needs at least 2 samples")
        if not np.allclose(cov, cov.T, rtol=0, atol=SYMMETRY_TOL * max(1.0, np.abs(cov).max())):
            raise ValueError("covariance is not symmetric")
        _check_psd(np.linalg.eigvalsh(cov), "covariance")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)

    @property
    def dim(self) -> int:
        return self.mean.shape[0]


def _check_psd(eigvals: np.ndarray, what: str) -> np.ndarray:
    scale = max(1.0, float(np.abs(eigvals).max(initial=0.0)))
    if eigvals.size and eigvals.min() < -EIG_TOL * scale:
        raise ValueError(f"{what} is not positive semi-definite (min eigenvalue {eigvals.min():.3g})")
    return np.clip(eigvals, 0.0, None)


def fit_gaussian(features) -> GaussianSummary:
    """Sample mean and unbiased, symmetrised covariance of an (N, D) matrix."""
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError(f"features must be (N, D), got shape {x.shape}")
    if x.shape[0] < 2:
        raise ValueError(f"need at least 2 feature rows, got {x.shape[0]}")
    mean = x.mean(axis=0)
    centred = x - mean
    cov = centred.T @ centred / (x.shape[0] - 1)
    return GaussianSummary(mean, (cov + cov.T) / 2, x.shape[0])


def _sqrt_psd(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh((m + m.T) / 2)
    w = _check_psd(w, "covariance")
    return (v * np.sqrt(w)) @ v.T


def frechet_distance(g1: GaussianSummary, g2: GaussianSummary) -> float:
    """||mu1 - mu2||^2 + Tr(S1 + S2 - 2 (S1 S2)^(1/2)).

    Each covariance gets a symmetric square root by eigendecomposition
    (eigenvalues within the tolerance below zero clamped to zero). The
    trace term is then the sum of singular values of S1^(1/2) S2^(1/2),
    i.e. the square roots of the eigenvalues of S1^(1/2) S2 S1^(1/2).
    Going through singular values keeps near-zero modes accurate for
    rank-deficient covariances and makes the result symmetric.
    """
    if g1.dim != g2.dim:
        raise ValueError(f"dimension mismatch: {g1.dim} vs {g2.dim}")
    cross = _sqrt_psd(g1.covariance) @ _sqrt_psd(g2.covariance)
    trace_sqrt = np.linalg.svd(cross, compute_uv=False).sum()
    diff = g1.mean - g2.mean
    value = diff @ diff + np.trace(g1.covariance) + np.trace(g2.covariance) - 2.0 * trace_sqrt
    return max(float(value), 0.0)


def fid(features_a, features_b) -> float:
    return frechet_distance(fit_gaussian(features_a), fit_gaussian(features_b))


class ClutterLevel(str, enum.Enum):
    LC = "LC"
    MC = "MC"
    HC = "HC"
    UNCLASSIFIED = "UNCLASSIFIED"


# object-count bands for the affordance study; counts between bands stay unclassified
CLUTTER_BANDS = ((1, 2, ClutterLevel.LC), (5, 8, ClutterLevel.MC), (11, 15, ClutterLevel.HC))


def clutter_level(object_count: int) -> ClutterLevel:
    for lo, hi, level in CLUTTER_BANDS:
        if lo <= object_count <= hi:
            return level
    return ClutterLevel.UNCLASSIFIED


class ApaWarning(UserWarning):
    pass


@dataclass(eq=False)
class ApaSample:
    predicted_points: list[tuple[float, float]]
    target_mask: np.ndarray
    clutter_level: ClutterLevel = ClutterLevel.UNCLASSIFIED
    frame_id: str = ""

    def __post_init__(self):
        self.target_mask = check_mask(self.target_mask, name="target_mask")
        if not self.target_mask.any():
            raise ValueError(f"sample {self.frame_id!r}: target mask is empty")
        self.clutter_level = ClutterLevel(self.clutter_level)

    def out_of_bounds(self) -> list[tuple[float, float]]:
        h, w = self.target_mask.shape
        return [(x, y) for x, y in self.predicted_points if not (0 <= x < w and 0 <= y < h)]

    def fraction_inside(self) -> float:
        """Share of points landing on the mask; off-image points count as misses."""
        h, w = self.target_mask.shape
        hits = 0
        for x, y in self.predicted_points:
            col, row = int(np.floor(x)), int(np.floor(y))
            if 0 <= col < w and 0 <= row < h and self.target_mask[row, col]:
                hits += 1
        return hits / len(self.predicted_points)


def apa(samples: Sequence[ApaSample]) -> dict[str, float]:
    """Percentage of predicted points inside the target mask, per clutter level.

    Each sample contributes its own fraction; a level's score is the mean of
    its samples' fractions times 100. Samples without points are skipped
    with an :class:`ApaWarning`.
    """
    per_level: dict[str, list[float]] = {}
    for s in samples:
        if not s.predicted_points:
            warnings.warn(f"sample {s.frame_id!r} has no predicted points; excluded", ApaWarning, stacklevel=2)
            continue
        bad = s.out_of_bounds()
        if bad:
            warnings.warn(f"sample {s.frame_id!r}: {len(bad)} point(s) outside the image", ApaWarning, stacklevel=2)
        per_level.setdefault(s.clutter_level.value, []).append(s.fraction_inside())
    return {level: 100.0 * float(np.mean(vals)) for level, vals in per_level.items()}


def load_apa_samples(path: str | Path) -> list[ApaSample]:
    """Read JSON lines ``{frame_id, points, mask_path, clutter_level?, object_count?}``.

    ``mask_path`` is resolved relative to the file. Without an explicit
    level, ``object_count`` is classified; otherwise the sample is
    UNCLASSIFIED.
    """
    path = Path(path)
    samples = []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        rec = json.loads(line)
        if rec.get("clutter_level"):
            level = ClutterLevel(rec["clutter_level"])
        elif "object_count" in rec:
            level = clutter_level(int(rec["object_count"]))
        else:
            level = ClutterLevel.UNCLASSIFIED
        mask = read_mask_png(path.parent / rec["mask_path"])
        points = [(float(p[0]), float(p[1])) for p in rec.get("points", [])]
        samples.append(ApaSample(points, mask, level, rec.get("frame_id", f"line{lineno}")))
    return samples
