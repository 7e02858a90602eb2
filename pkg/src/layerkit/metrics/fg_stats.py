"""Foreground placement statistics on a 0-100 scale.

Computed from the binarized mask: occupancy is the covered fraction,
longest span is the larger side of the bounding box relative to the
matching image side, and the center is the mask centroid.  All three
are percentages, so corpora of different resolutions compare directly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..raster import as_alpha


@dataclass(frozen=True)
class FgStats:
    occupancy: float
    longest_span: float
    center_x: float
    center_y: float

    def as_dict(self) -> dict:
        return {
            "occupancy": self.occupancy,
            "longest_span": self.longest_span,
            "center_x": self.center_x,
            "center_y": self.center_y,
        }


def fg_stats(alpha, threshold: float = 0.5) -> FgStats:
    a = as_alpha(alpha)
    if not 0.0 < threshold < 1.0:
        raise ValueError(f"threshold must be in (0, 1), got {threshold}")
    binary = a >= threshold
    if not binary.any():
        raise ValueError("empty foreground: statistics undefined")
    h, w = binary.shape
    rows = np.flatnonzero(binary.any(axis=1))
    cols = np.flatnonzero(binary.any(axis=0))
    span_y = (rows[-1] - rows[0] + 1) / h
    span_x = (cols[-1] - cols[0] + 1) / w
    ys, xs = np.nonzero(binary)
    return FgStats(
        occupancy=100.0 * float(binary.mean()),
        longest_span=100.0 * float(max(span_x, span_y)),
        center_x=100.0 * float((xs.mean() + 0.5) / w),
        center_y=100.0 * float((ys.mean() + 0.5) / h),
    )


def fg_stats_summary(masks, threshold: float = 0.5) -> dict:
    """Mean and standard deviation of each statistic over a collection."""
    rows = [fg_stats(m, threshold) for m in masks]
    if not rows:
        raise ValueError("no masks")
    out = {}
    for key in ("occupancy", "longest_span", "center_x", "center_y"):
        vals = np.array([getattr(r, key) for r in rows])
        out[key] = {"mean": float(vals.mean()), "std": float(vals.std())}
    return out
