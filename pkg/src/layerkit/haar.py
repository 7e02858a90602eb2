"""Orthonormal 2D Haar analysis and a multi-scale high-frequency loss.

One analysis step maps each disjoint 2x2 block

    [[p, q],
     [r, s]]

to four coefficients

    approx      = (p + q + r + s) / 2
    horizontal  = (p - q + r - s) / 2     (left/right contrast)
    vertical    = (p + q - r - s) / 2     (top/bottom contrast)
    diagonal    = (p - q - r + s) / 2

Each filter has unit L2 norm, so total energy is preserved exactly and
the inverse is the transpose.  Recursing on the approximation band
gives a pyramid; scale 0 holds the finest detail, scale s has subbands
of shape (H / 2**(s+1), W / 2**(s+1)).

high_frequency_loss compares only the detail subbands of two images:
the mean squared coefficient difference of each selected subband,
summed over the three orientations, the selected scales and the image
channels.  Per-subband normalization keeps coarse scales, which have
fewer coefficients but larger footprints, on an equal footing with
fine ones.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .raster import ShapeError


@dataclass(frozen=True)
class HaarPyramid:
    """Detail subbands per scale (fine to coarse) plus the final approximation.

    details[s] is the (horizontal, vertical, diagonal) triple at scale s.
    Arrays keep any trailing channel axis of the input.
    """

    details: tuple
    approx: np.ndarray

    @property
    def levels(self) -> int:
        return len(self.details)


def _check_dims(shape, levels: int) -> None:
    div = 1 << levels
    if shape[0] % div or shape[1] % div:
        raise ShapeError(
            f"spatial dims {shape[:2]} must be divisible by 2**levels = {div}"
        )


def haar_decompose(x, levels: int) -> HaarPyramid:
    """Run `levels` analysis steps on an (H, W) or (H, W, C) array."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim not in (2, 3):
        raise ShapeError(f"expected (H, W) or (H, W, C), got shape {np.shape(x)}")
    if levels < 1:
        raise ValueError(f"levels must be >= 1, got {levels}")
    _check_dims(arr.shape, levels)
    details = []
    a = arr
    for _ in range(levels):
        p = a[0::2, 0::2]
        q = a[0::2, 1::2]
        r = a[1::2, 0::2]
        s = a[1::2, 1::2]
        details.append((
            (p - q + r - s) / 2.0,
            (p + q - r - s) / 2.0,
            (p - q - r + s) / 2.0,
        ))
        a = (p + q + r + s) / 2.0
    return HaarPyramid(details=tuple(details), approx=a)


def haar_reconstruct(pyramid: HaarPyramid) -> np.ndarray:
    """Invert haar_decompose exactly (up to float rounding)."""
    a = np.asarray(pyramid.approx, dtype=np.float64)
    for h, v, d in reversed(pyramid.details):
        h = np.asarray(h, dtype=np.float64)
        v = np.asarray(v, dtype=np.float64)
        d = np.asarray(d, dtype=np.float64)
        if h.shape != a.shape or v.shape != a.shape or d.shape != a.shape:
            raise ShapeError(
                f"subband shapes {h.shape}/{v.shape}/{d.shape} do not match approximation {a.shape}"
            )
        out_shape = (a.shape[0] * 2, a.shape[1] * 2) + a.shape[2:]
        out = np.empty(out_shape, dtype=np.float64)
        out[0::2, 0::2] = (a + h + v + d) / 2.0
        out[0::2, 1::2] = (a - h + v - d) / 2.0
        out[1::2, 0::2] = (a + h - v - d) / 2.0
        out[1::2, 1::2] = (a - h - v + d) / 2.0
        a = out
    return a


@dataclass(frozen=True)
class HFConfig:
    """Which pyramid scales the high-frequency loss compares."""

    scales: tuple = (0, 1, 2)

    def __post_init__(self):
        if len(self.scales) == 0:
            raise ValueError("scales must be non-empty")
        for s in self.scales:
            if int(s) != s or s < 0:
                raise ValueError(f"scales must be non-negative integers, got {self.scales}")

    @property
    def levels(self) -> int:
        return max(self.scales) + 1


def high_frequency_loss(x, y, config: HFConfig = HFConfig()) -> float:
    """Sum of per-subband mean squared detail differences between x and y.

    For each scale s in config.scales and each orientation k, adds
    ||D_{s,k}(x) - D_{s,k}(y)||^2 / N_s where N_s is the number of
    spatial coefficients in one subband at that scale.  Channels are
    summed, not averaged.  Identical inputs give exactly 0; inputs that
    differ by a constant offset also give 0 since the detail filters
    kill constants.
    """
    ax = np.asarray(x, dtype=np.float64)
    ay = np.asarray(y, dtype=np.float64)
    if ax.shape != ay.shape:
        raise ShapeError(f"inputs differ in shape: {ax.shape} vs {ay.shape}")
    levels = config.levels
    px = haar_decompose(ax, levels)
    py = haar_decompose(ay, levels)
    h, w = ax.shape[:2]
    total = 0.0
    for s in config.scales:
        n_s = (h >> (s + 1)) * (w >> (s + 1))
        for dx, dy in zip(px.details[s], py.details[s]):
            diff = dx - dy
            total += float(np.sum(diff * diff)) / n_s
    return total
