"""Occlusion inpainting of the recovered background.

The mask marks pixels where the foreground effectively hides the
background (alpha above a visibility threshold); an inpainter fills
exactly those pixels and must leave every unmasked pixel untouched,
which inpaint_occluded enforces bit for bit regardless of what the
inpainter returns.
"""

from __future__ import annotations

import numpy as np

from ..raster import ShapeError, as_alpha, as_image


class InpaintAdapterError(RuntimeError):
    """The plugged-in inpainter failed; carries mask context."""


def occlusion_mask(alpha, threshold: float = 0.95) -> np.ndarray:
    """Binary (H, W) map of pixels with alpha strictly above threshold."""
    a = as_alpha(alpha)
    if not 0.0 < threshold < 1.0:
        raise ValueError(f"threshold must be in (0, 1), got {threshold}")
    return (a > threshold).astype(np.float64)


def _check_mask(mask, shape) -> np.ndarray:
    m = np.asarray(mask, dtype=np.float64)
    if m.shape != shape:
        raise ShapeError(f"mask {m.shape} does not match image {shape}")
    if not np.isin(m, (0.0, 1.0)).all():
        raise ValueError("mask must be binary")
    return m.astype(bool)


def constant_fill(value: float | None = None):
    """Inpainter that writes one constant into the masked region.

    With value None the mean of the unmasked pixels is used, falling
    back to 0.5 when the mask covers the whole frame.
    """

    def fill(image, mask):
        img = as_image(image)
        m = _check_mask(mask, img.shape[:2])
        if value is not None:
            v = float(value)
        elif (~m).any():
            v = float(img[~m].mean())
        else:
            v = 0.5
        out = img.copy()
        out[m] = v
        return out

    return fill


def diffusion_fill(image, mask, iterations: int = 400, tol: float = 1e-9, levels: int | None = None):
    """Harmonic fill: masked pixels relax to their neighbor average.

    Unmasked pixels act as Dirichlet boundary.  A coarse-to-fine sweep
    keeps large holes cheap.  A mask covering the whole frame has no
    boundary; the fill then stays at the initial 0.5.
    """
    import cv2

    img = as_image(image)
    m = _check_mask(mask, img.shape[:2])
    h, w = m.shape
    if levels is None:
        levels = max(1, int(np.log2(max(min(h, w), 2))) - 2)
    shapes = [(h, w)]
    for _ in range(levels - 1):
        ph, pw = shapes[-1]
        nh, nw = max(2, (ph + 1) // 2), max(2, (pw + 1) // 2)
        if (nh, nw) == shapes[-1]:
            break
        shapes.append((nh, nw))
    shapes = shapes[::-1]

    fill = None
    for lh, lw in shapes:
        if (lh, lw) == (h, w):
            li, lm = img, m
        else:
            li = cv2.resize(img.astype(np.float32), (lw, lh), interpolation=cv2.INTER_AREA).astype(np.float64)
            lm = cv2.resize(m.astype(np.float32), (lw, lh), interpolation=cv2.INTER_AREA) > 0.999
        if fill is None:
            fill = li.copy()
            fill[lm] = 0.5
        else:
            fill = cv2.resize(fill.astype(np.float32), (lw, lh), interpolation=cv2.INTER_LINEAR).astype(np.float64)
            fill[~lm] = li[~lm]
        for _ in range(iterations):
            if not lm.any():
                break
            num = np.zeros_like(fill)
            cnt = np.zeros(fill.shape[:2])
            num[1:] += fill[:-1]
            cnt[1:] += 1
            num[:-1] += fill[1:]
            cnt[:-1] += 1
            num[:, 1:] += fill[:, :-1]
            cnt[:, 1:] += 1
            num[:, :-1] += fill[:, 1:]
            cnt[:, :-1] += 1
            new = num / cnt[:, :, None]
            delta = np.abs(new[lm] - fill[lm]).max() if lm.any() else 0.0
            fill[lm] = new[lm]
            if delta < tol:
                break
    return np.clip(fill, 0.0, 1.0)


def inpaint_occluded(image, mask, inpainter=None) -> np.ndarray:
    """Fill the masked region; unmasked pixels survive bit for bit.

    inpainter is any callable (image, mask) -> image; default is the
    harmonic fill.  An empty mask returns the input unchanged.
    """
    img = as_image(image)
    m = _check_mask(mask, img.shape[:2])
    if not m.any():
        return img.copy()
    fn = inpainter if inpainter is not None else diffusion_fill
    try:
        out = np.asarray(fn(img, m.astype(np.float64)), dtype=np.float64)
    except Exception as e:
        raise InpaintAdapterError(
            f"inpainter failed on a mask of {int(m.sum())} pixels "
            f"({100.0 * m.mean():.1f}% of frame): {e}"
        ) from e
    if out.shape != img.shape:
        raise InpaintAdapterError(f"inpainter returned shape {out.shape}, expected {img.shape}")
    out[~m] = img[~m]
    return np.clip(out, 0.0, 1.0)
