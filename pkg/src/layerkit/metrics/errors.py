"""Pixelwise error metrics.

SAD is the plain sum of absolute differences over all pixels and
channels, so SAD == MAD * element_count by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..raster import ShapeError


def _pair(pred, target):
    p = np.asarray(pred, dtype=np.float64)
    t = np.asarray(target, dtype=np.float64)
    if p.shape != t.shape:
        raise ShapeError(f"prediction {p.shape} and target {t.shape} differ")
    if p.size == 0:
        raise ValueError("empty arrays")
    return p, t


@dataclass(frozen=True)
class LayerErrors:
    mad: float
    mse: float
    sad: float

    def as_dict(self) -> dict:
        return {"mad": self.mad, "mse": self.mse, "sad": self.sad}


def layer_errors(pred, target) -> LayerErrors:
    p, t = _pair(pred, target)
    diff = p - t
    mad = float(np.mean(np.abs(diff)))
    return LayerErrors(
        mad=mad,
        mse=float(np.mean(diff * diff)),
        sad=mad * p.size,
    )


def psnr(pred, target, peak: float = 1.0) -> float:
    """Peak signal-to-noise ratio in dB; identical inputs give inf."""
    p, t = _pair(pred, target)
    mse = float(np.mean((p - t) ** 2))
    if mse == 0.0:
        return float("inf")
    return 10.0 * np.log10(peak * peak / mse)
