"""Two-class (foreground/background) mean IoU of alpha masks."""

from __future__ import annotations

import numpy as np

from ..raster import ShapeError, as_alpha


def _iou(a: np.ndarray, b: np.ndarray) -> float:
    union = np.logical_or(a, b).sum()
    if union == 0:
        return 1.0  # both classes empty: perfect agreement
    return float(np.logical_and(a, b).sum() / union)


def fg_miou(pred_alpha, gt_alpha, threshold: float = 0.5) -> float:
    """Mean of foreground IoU and background IoU after binarization."""
    p = as_alpha(pred_alpha, "pred_alpha")
    g = as_alpha(gt_alpha, "gt_alpha")
    if p.shape != g.shape:
        raise ShapeError(f"masks differ in shape: {p.shape} vs {g.shape}")
    if not 0.0 < threshold < 1.0:
        raise ValueError(f"threshold must be in (0, 1), got {threshold}")
    pb, gb = p >= threshold, g >= threshold
    return 0.5 * (_iou(pb, gb) + _iou(~pb, ~gb))
