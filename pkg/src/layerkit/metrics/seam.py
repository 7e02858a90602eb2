"""Seam score: gradient excess along the occlusion boundary.

A recovered background should continue smoothly through the region the
foreground used to cover.  The score compares mean gradient magnitude
in a thin band around the occlusion contour against matched control
bands displaced inward and outward from it; copy-paste seams light up
the boundary band, while natural texture raises the controls equally.
Near 0 means no seam, positive means boundary-aligned structure.
"""

from __future__ import annotations

import numpy as np

from ..raster import EPS_VIS, ShapeError, as_alpha, as_image
from ..trimap import binary_dilate, binary_erode


def _gradient_magnitude(img: np.ndarray) -> np.ndarray:
    gx = np.zeros(img.shape[:2])
    gy = np.zeros(img.shape[:2])
    dx = np.diff(img, axis=1)
    dy = np.diff(img, axis=0)
    gx[:, :-1] = np.sqrt((dx * dx).sum(axis=2))
    gy[:-1, :] = np.sqrt((dy * dy).sum(axis=2))
    return np.hypot(gx, gy)


def _contour_band(region: np.ndarray, band: int) -> np.ndarray:
    return binary_dilate(region, band) & ~binary_erode(region, band)


def seam_metric(
    background,
    alpha,
    eps_vis: float = EPS_VIS,
    band: int = 1,
    control_offset: int = 3,
) -> float:
    """Boundary-band mean gradient minus control-band mean gradient."""
    bg = as_image(background, "background")
    a = as_alpha(alpha)
    if a.shape != bg.shape[:2]:
        raise ShapeError(f"alpha {a.shape} does not match background {bg.shape[:2]}")
    if band < 1 or control_offset <= band:
        raise ValueError(f"need control_offset > band >= 1, got band={band}, offset={control_offset}")
    occluded = a >= 1.0 - eps_vis
    if not occluded.any():
        raise ValueError("no fully occluded region: seam score undefined")
    if occluded.all():
        raise ValueError("occlusion covers the whole frame: no boundary to score")
    boundary = _contour_band(occluded, band)
    inner = _contour_band(binary_erode(occluded, control_offset), band)
    outer = _contour_band(binary_dilate(occluded, control_offset), band)
    control = (inner | outer) & ~boundary
    if not boundary.any() or not control.any():
        raise ValueError("occlusion too thin for the requested band/offset")
    g = _gradient_magnitude(bg)
    return float(g[boundary].mean() - g[control].mean())
