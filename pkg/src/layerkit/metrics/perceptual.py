"""Structural dissimilarity as a cheap perceptual stand-in.

Compares images across a blur pyramid: per level, the mean squared
difference of local means and of local contrasts.  Any callable with
the signature (pred, target) -> float can replace it in reports where
a learned perceptual metric is available.
"""

from __future__ import annotations

import cv2
import numpy as np

from ..raster import ShapeError


def _pyramid(img: np.ndarray, levels: int) -> list:
    out = [img]
    cur = img.astype(np.float32)
    for _ in range(levels - 1):
        cur = cv2.pyrDown(cur)
        out.append(cur.astype(np.float64))
    return out


def perceptual_distance(pred, target, levels: int = 3) -> float:
    p = np.asarray(pred, dtype=np.float64)
    t = np.asarray(target, dtype=np.float64)
    if p.shape != t.shape:
        raise ShapeError(f"prediction {p.shape} and target {t.shape} differ")
    if min(p.shape[:2]) < 2 ** levels:
        raise ValueError(f"image too small for {levels} pyramid levels")
    total = 0.0
    for a, b in zip(_pyramid(p, levels), _pyramid(t, levels)):
        blur_a = cv2.blur(a.astype(np.float32), (3, 3)).astype(np.float64)
        blur_b = cv2.blur(b.astype(np.float32), (3, 3)).astype(np.float64)
        contrast_a = np.abs(a - blur_a)
        contrast_b = np.abs(b - blur_b)
        total += float(np.mean((blur_a - blur_b) ** 2)) + float(np.mean((contrast_a - contrast_b) ** 2))
    return total / levels
