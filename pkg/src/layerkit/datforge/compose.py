"""Sample assembly: standardize assets, place the cutout, compose.

A sample stores the full ground truth of its own construction.  The
foreground layer is the pasted cutout over a zero canvas (alpha is 0
wherever nothing was pasted, so those pixels never reach the
composite), the background layer is the standardized background photo,
and the composite is their exact alpha blend.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import cv2
import numpy as np

from ..raster import LayeredImage, ShapeError, as_alpha, as_image, composite, reconstruction_error
from ..seeding import np_rng, spawn_seeds
from ..trimap import make_trimap
from .procedural import BackgroundAsset, ForegroundAsset


@dataclass(frozen=True)
class DatasetSample:
    """One layered training example with full ground truth."""

    composite: np.ndarray
    alpha: np.ndarray
    foreground: np.ndarray
    background: np.ndarray
    trimap: np.ndarray | None = None
    seed: int = 0
    sample_id: str = ""

    def layered(self) -> LayeredImage:
        return LayeredImage(
            foreground=self.foreground,
            background=self.background,
            alpha=self.alpha,
            composite=self.composite,
        )

    def validate(self, tol: float = 1e-6) -> None:
        self.layered().validate(tol)

    def with_trimap(self, trimap) -> "DatasetSample":
        return replace(self, trimap=trimap)

    @property
    def resolution(self) -> int:
        return self.composite.shape[0]


def _resize(arr: np.ndarray, width: int, height: int, interpolation) -> np.ndarray:
    out = cv2.resize(arr.astype(np.float32), (width, height), interpolation=interpolation)
    if out.ndim == 2 and arr.ndim == 3:
        out = out[:, :, None]
    return np.clip(out.astype(np.float64), 0.0, 1.0)


def standardize(image, short_side: int = 512, crop: int = 512) -> np.ndarray:
    """Bicubic-resize so the short side hits short_side, then center crop.

    Aspect ratio is preserved by the resize; crop must not exceed
    short_side, so the crop window always fits.
    """
    img = as_image(image)
    if crop < 1 or short_side < 1:
        raise ValueError("short_side and crop must be positive")
    if short_side < crop:
        raise ValueError(f"short_side {short_side} smaller than crop {crop}")
    h, w = img.shape[:2]
    if h <= w:
        nh, nw = short_side, max(short_side, round(w * short_side / h))
    else:
        nh, nw = max(short_side, round(h * short_side / w)), short_side
    resized = _resize(img, nw, nh, cv2.INTER_CUBIC)
    r0 = (nh - crop) // 2
    c0 = (nw - crop) // 2
    return resized[r0:r0 + crop, c0:c0 + crop]


def _rescale_cutout(rgba: np.ndarray, scale: float) -> np.ndarray:
    if scale == 1.0:
        return rgba
    h, w = rgba.shape[:2]
    nh, nw = max(2, round(h * scale)), max(2, round(w * scale))
    interp = cv2.INTER_AREA if scale < 1.0 else cv2.INTER_LINEAR
    return _resize(rgba, nw, nh, interp)


def synthesize_sample(
    fg: ForegroundAsset,
    bg: BackgroundAsset,
    seed: int,
    scale_range: tuple = (0.6, 1.0),
    max_shift: float = 0.4,
) -> DatasetSample:
    """Paste a (rescaled, shifted) cutout over a background and compose.

    Placement clips at the frame: parts of the cutout shifted off-canvas
    are dropped.  Off-cutout foreground pixels are zero and carry zero
    alpha, so the composite never sees them.
    """
    bg_rgb = as_image(bg.rgb, "background")
    h, w = bg_rgb.shape[:2]
    rgba = as_image(fg.rgba, "foreground rgba")
    if rgba.shape[2] != 4:
        raise ShapeError(f"foreground asset must be RGBA, got {rgba.shape}")
    rng = np_rng(seed)
    scale = float(rng.uniform(*scale_range))
    rgba = _rescale_cutout(rgba, scale)
    ch, cw = rgba.shape[:2]
    if ch > h or cw > w:
        raise ShapeError(f"cutout {rgba.shape[:2]} larger than canvas {(h, w)}")
    dy = int(rng.integers(-int(h * max_shift), int(h * max_shift) + 1))
    dx = int(rng.integers(-int(w * max_shift), int(w * max_shift) + 1))
    top = (h - ch) // 2 + dy
    left = (w - cw) // 2 + dx
    # clip the paste window to the frame
    src_t, src_l = max(0, -top), max(0, -left)
    dst_t, dst_l = max(0, top), max(0, left)
    rows = min(ch - src_t, h - dst_t)
    cols = min(cw - src_l, w - dst_l)
    fg_full = np.zeros((h, w, 3))
    a_full = np.zeros((h, w))
    if rows > 0 and cols > 0:
        fg_full[dst_t:dst_t + rows, dst_l:dst_l + cols] = rgba[src_t:src_t + rows, src_l:src_l + cols, :3]
        a_full[dst_t:dst_t + rows, dst_l:dst_l + cols] = rgba[src_t:src_t + rows, src_l:src_l + cols, 3]
    comp = composite(fg_full, bg_rgb, a_full)
    sample = DatasetSample(
        composite=comp,
        alpha=a_full,
        foreground=fg_full,
        background=bg_rgb,
        seed=int(seed),
    )
    assert reconstruction_error(comp, sample.layered()) == 0.0
    return sample


def matting_trimap(
    alpha,
    seed: int,
    radius_range: tuple = (1, 5),
    reference_size: int = 64,
) -> np.ndarray:
    """Draw erosion/dilation radii and build the sample's trimap.

    Radii are drawn uniformly from radius_range at reference_size and
    scaled proportionally with resolution, with a floor of 1 so the
    unknown band always covers at least the boundary pixels.
    """
    a = as_alpha(alpha)
    lo, hi = int(radius_range[0]), int(radius_range[1])
    if lo < 0 or hi < lo:
        raise ValueError(f"bad radius_range {radius_range}")
    rng = np_rng(seed)
    scale = min(a.shape) / reference_size
    er = max(1, round(int(rng.integers(lo, hi + 1)) * scale))
    dr = max(1, round(int(rng.integers(lo, hi + 1)) * scale))
    return make_trimap(a, er, dr)


def sample_from_seed(seed: int, resolution: int = 64, scale_range: tuple = (0.6, 1.0)) -> DatasetSample:
    """Fully procedural sample: derive asset and placement seeds, build."""
    from .procedural import procedural_background, procedural_foreground

    fg_seed, bg_seed, place_seed = spawn_seeds(seed, 3)
    fg = procedural_foreground(fg_seed, size=resolution)
    bg = procedural_background(bg_seed, size=resolution)
    return replace(
        synthesize_sample(fg, bg, place_seed, scale_range=scale_range),
        seed=int(seed),
    )
