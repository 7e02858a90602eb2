"""Trimap construction from binary masks.

A trimap partitions an image into definite foreground (1.0), definite
background (0.0) and an unknown band (0.5) for a matting model to
resolve.  The band is produced by eroding and dilating the binarized
mask with square structuring elements; pixels outside the frame count
as background, so erosion eats into regions touching the border.
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage

from .raster import ShapeError, as_alpha

TRIMAP_LEVELS = (0.0, 0.5, 1.0)


def _square(radius: int) -> np.ndarray:
    return np.ones((2 * radius + 1, 2 * radius + 1), dtype=bool)


def binary_erode(mask: np.ndarray, radius: int) -> np.ndarray:
    """Erode a boolean mask with a (2r+1) square, border treated as 0."""
    if radius == 0:
        return mask.copy()
    return ndimage.binary_erosion(mask, structure=_square(radius), border_value=0)


def binary_dilate(mask: np.ndarray, radius: int) -> np.ndarray:
    """Dilate a boolean mask with a (2r+1) square, border treated as 0."""
    if radius == 0:
        return mask.copy()
    return ndimage.binary_dilation(mask, structure=_square(radius), border_value=0)


def make_trimap(mask, erode_radius: int, dilate_radius: int, fg_threshold: float = 0.5) -> np.ndarray:
    """Build a {0, 0.5, 1} trimap from a soft or binary mask.

    The mask is binarized at fg_threshold (>= is foreground), then the
    eroded core becomes 1.0, everything outside the dilated support
    becomes 0.0, and the ring in between becomes the unknown 0.5 band.
    """
    a = as_alpha(mask, "mask")
    er, dr = int(erode_radius), int(dilate_radius)
    if er < 0 or dr < 0:
        raise ValueError(f"radii must be >= 0, got erode {erode_radius}, dilate {dilate_radius}")
    if not 0.0 < fg_threshold < 1.0:
        raise ValueError(f"fg_threshold must be in (0, 1), got {fg_threshold}")
    binary = a >= fg_threshold
    core = binary_erode(binary, er)
    support = binary_dilate(binary, dr)
    return np.where(core, 1.0, np.where(support, 0.5, 0.0))


def validate_trimap(trimap) -> np.ndarray:
    t = as_alpha(trimap, "trimap")
    if not np.isin(t, TRIMAP_LEVELS).all():
        raise ValueError("trimap contains levels other than {0, 0.5, 1}")
    return t


def refine_trimap_transparency(trimap, transparent) -> np.ndarray:
    """Demote definite-foreground pixels flagged as see-through to unknown.

    Glass, smoke and similar content sits inside the segmentation mask
    but still shows the background, so a matting model must be allowed
    to assign it fractional alpha.  transparent is a binary (H, W) map;
    pixels where both trimap == 1 and transparent == 1 become 0.5.
    """
    t = validate_trimap(trimap)
    flag = np.asarray(transparent, dtype=np.float64)
    if flag.shape != t.shape:
        raise ShapeError(f"transparency map {flag.shape} does not match trimap {t.shape}")
    if not np.isin(flag, (0.0, 1.0)).all():
        raise ValueError("transparency map must be binary")
    out = t.copy()
    out[(t == 1.0) & (flag == 1.0)] = 0.5
    return out
