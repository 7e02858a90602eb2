"""Lossless spatial/channel rearrangement of alpha masks.

pixel_unshuffle moves an (H, W) mask to (H/r, W/r, r*r) so it can be
concatenated with latents that live at 1/r resolution.  Channel k of an
output pixel holds the mask value at block offset (k // r, k % r), i.e.
blocks are scanned row by row.  pixel_shuffle is the exact inverse.
"""

from __future__ import annotations

import math

import numpy as np

from .raster import ShapeError, as_alpha


def pixel_unshuffle(mask, factor: int) -> np.ndarray:
    """Fold r x r spatial blocks of a mask into r*r channels."""
    a = as_alpha(mask, "mask")
    r = int(factor)
    if r < 1:
        raise ValueError(f"factor must be >= 1, got {factor}")
    h, w = a.shape
    if h % r or w % r:
        raise ShapeError(f"mask {a.shape} not divisible by factor {r}")
    out = a.reshape(h // r, r, w // r, r).transpose(0, 2, 1, 3).reshape(h // r, w // r, r * r)
    return out


def pixel_shuffle(channels, factor: int | None = None) -> np.ndarray:
    """Unfold r*r channels back to r x r spatial blocks.

    factor is optional; when given it must match the channel count,
    which otherwise has to be a perfect square.
    """
    u = np.asarray(channels, dtype=np.float64)
    if u.ndim != 3:
        raise ShapeError(f"expected (h, w, r*r), got shape {np.shape(channels)}")
    h, w, c = u.shape
    r = math.isqrt(c)
    if r * r != c:
        raise ShapeError(f"channel count {c} is not a perfect square")
    if factor is not None and int(factor) != r:
        raise ShapeError(f"channel count {c} does not match declared factor {factor}")
    return u.reshape(h, w, r, r).transpose(0, 2, 1, 3).reshape(h * r, w * r)
