"""Transform-domain fusion of two registered grayscale images.

The fused image is ``idwt2(rule(dwt2(img1), dwt2(img2)))`` with the rule
applied coefficient-wise to every band, LL included.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import ShapeError
from .wavelet import Mode, WaveletPyramid, dwt2, idwt2


class FusionRule(enum.Enum):
    AVERAGING = "avg"
    MAXIMUM = "max"
    MINIMUM = "min"
    PCA = "pca"

    @classmethod
    def parse(cls, value: "FusionRule | str") -> "FusionRule":
        if isinstance(value, FusionRule):
            return value
        key = value.strip().lower()
        aliases = {"average": "avg", "averaging": "avg", "maximum": "max", "minimum": "min"}
        return cls(aliases.get(key, key))


@dataclass(frozen=True)
class PcaWeights:
    a1: float
    a2: float
    degenerate: bool = False


def combine_avg(c1, c2):
    return (np.asarray(c1, dtype=np.float64) + c2) / 2


def combine_max(c1, c2):
    """Pick the coefficient of larger magnitude; ties keep ``c1``."""
    c1, c2 = np.asarray(c1, dtype=np.float64), np.asarray(c2, dtype=np.float64)
    return np.where(np.abs(c2) > np.abs(c1), c2, c1)


def combine_min(c1, c2):
    """Pick the coefficient of smaller magnitude; ties keep ``c1``."""
    c1, c2 = np.asarray(c1, dtype=np.float64), np.asarray(c2, dtype=np.float64)
    return np.where(np.abs(c2) < np.abs(c1), c2, c1)


def pca_weights(img1: np.ndarray, img2: np.ndarray) -> PcaWeights:
    """Fusion weights from the principal eigenvector of the pixel covariance.

    The two images are flattened into paired samples, the 2x2 covariance is
    eigen-decomposed and the eigenvector of the larger eigenvalue is scaled so
    its components sum to one. Zero covariance (both images flat) has no
    principal direction; ``(0.5, 0.5)`` is returned with ``degenerate=True``.
    The same fallback covers eigenvectors whose components cancel.
    """
    x = np.asarray(img1, dtype=np.float64).ravel()
    y = np.asarray(img2, dtype=np.float64).ravel()
    if x.shape != y.shape:
        raise ShapeError("images must have the same size")
    if x.size < 2:
        raise ShapeError("need at least two pixels")
    cov = np.cov(np.stack([x, y]))
    if not np.any(cov):
        return PcaWeights(0.5, 0.5, degenerate=True)
    vals, vecs = np.linalg.eigh(cov)
    v = vecs[:, int(np.argmax(vals))]
    total = v.sum()
    if not np.isfinite(total) or abs(total) <= 1e-12 * np.abs(v).sum():
        return PcaWeights(0.5, 0.5, degenerate=True)
    a1 = float(v[0] / total)
    return PcaWeights(a1, 1.0 - a1)


def fuse_pyramids(p1: WaveletPyramid, p2: WaveletPyramid, rule: FusionRule | str,
                  weights: PcaWeights | None = None) -> WaveletPyramid:
    rule = FusionRule.parse(rule)
    if p1.shape != p2.shape or p1.levels != p2.levels or p1.mode != p2.mode:
        raise ShapeError("pyramids differ in shape, depth or mode")
    c1, c2 = p1.coeffs, p2.coeffs
    if rule is FusionRule.AVERAGING:
        out = combine_avg(c1, c2)
    elif rule is FusionRule.MAXIMUM:
        out = combine_max(c1, c2)
    elif rule is FusionRule.MINIMUM:
        out = combine_min(c1, c2)
    else:
        if weights is None:
            raise ValueError("PCA fusion needs weights")
        out = weights.a1 * c1 + weights.a2 * c2
    if p1.mode == Mode.INTEGER:
        # keeps the integer inverse exact
        out = np.rint(out)
    return p1.replace(out)


def fuse(img1: np.ndarray, img2: np.ndarray, rule: FusionRule | str = FusionRule.AVERAGING,
         levels: int = 3, mode: Mode | str = Mode.INTEGER) -> np.ndarray:
    """Fuse two same-size images; returns a float64 image (not clamped)."""
    img1, img2 = np.asarray(img1), np.asarray(img2)
    if img1.shape != img2.shape:
        raise ShapeError(f"image sizes differ: {img1.shape} vs {img2.shape}; crop first")
    rule = FusionRule.parse(rule)
    weights = pca_weights(img1, img2) if rule is FusionRule.PCA else None
    p1 = dwt2(img1, levels, mode)
    p2 = dwt2(img2, levels, mode)
    return idwt2(fuse_pyramids(p1, p2, rule, weights))
