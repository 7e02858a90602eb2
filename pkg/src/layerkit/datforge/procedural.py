"""Procedural foreground and background assets.

Foregrounds are star-convex shapes (smooth blobs, polygons, rings) with
anti-aliased edges, so every mask contains exact-0, exact-1 and
fractional alpha.  Backgrounds are textured fields with guaranteed
spatial variance and no salient object.  Everything derives from one
integer seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..seeding import np_rng

FG_KINDS = ("blob", "polygon", "ring")
BG_KINDS = ("gradient", "field", "stripes")


@dataclass(frozen=True)
class ForegroundAsset:
    """RGBA cutout with straight (non-premultiplied) alpha."""

    rgba: np.ndarray
    source_id: str

    @property
    def rgb(self) -> np.ndarray:
        return self.rgba[:, :, :3]

    @property
    def alpha(self) -> np.ndarray:
        return self.rgba[:, :, 3]


@dataclass(frozen=True)
class BackgroundAsset:
    rgb: np.ndarray
    source_id: str


def _polar(size: int, cx: float, cy: float):
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    dy, dx = yy - cy, xx - cx
    return np.hypot(dy, dx), np.arctan2(dy, dx)


def _boundary_radius(kind: str, theta: np.ndarray, base: float, rng) -> np.ndarray:
    if kind == "blob":
        out = np.ones_like(theta)
        for m in range(2, 5):
            amp = rng.uniform(0.0, 0.25) / (m - 1)
            out = out + amp * np.sin(m * theta + rng.uniform(0, 2 * np.pi))
        return base * out
    if kind == "polygon":
        k = int(rng.integers(3, 8))
        angles = np.sort(rng.uniform(0, 2 * np.pi, k))
        radii = base * rng.uniform(0.7, 1.3, k)
        # wrap the vertex list so interpolation is periodic
        ext_angles = np.concatenate([angles - 2 * np.pi, angles, angles + 2 * np.pi])
        ext_radii = np.concatenate([radii, radii, radii])
        return np.interp(theta, ext_angles, ext_radii)
    raise ValueError(f"unknown kind {kind!r}")


def _texture(size: int, rng) -> np.ndarray:
    base = rng.uniform(0.15, 0.85, 3)
    rgb = np.tile(base, (size, size, 1))
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64) / size
    for _ in range(2):
        direction = rng.uniform(0, 2 * np.pi)
        freq = rng.uniform(2.0, 8.0)
        phase = rng.uniform(0, 2 * np.pi)
        wave = np.sin(2 * np.pi * freq * (np.cos(direction) * xx + np.sin(direction) * yy) + phase)
        tint = rng.uniform(-0.2, 0.2, 3)
        rgb = rgb + wave[:, :, None] * tint
    rgb = rgb + rng.normal(0.0, 0.015, rgb.shape)
    return np.clip(rgb, 0.0, 1.0)


def procedural_foreground(seed: int, size: int = 64) -> ForegroundAsset:
    """Deterministic RGBA cutout; alpha holds 0s, 1s and in-betweens."""
    if size < 8:
        raise ValueError(f"size must be >= 8, got {size}")
    rng = np_rng(seed)
    kind = FG_KINDS[int(rng.integers(0, len(FG_KINDS)))]
    cx = size * rng.uniform(0.35, 0.65)
    cy = size * rng.uniform(0.35, 0.65)
    base = size * rng.uniform(0.15, 0.32)
    r, theta = _polar(size, cx, cy)
    if kind == "ring":
        halfwidth = base * rng.uniform(0.25, 0.45)
        dist = np.abs(r - base) - halfwidth
    else:
        dist = r - _boundary_radius(kind, theta, base, rng)
    softness = rng.uniform(1.0, 2.5)
    alpha = np.clip(0.5 - dist / softness, 0.0, 1.0)
    for _ in range(5):
        if (alpha == 1.0).any():
            break
        softness *= 0.5  # tiny shape: sharpen the edge until a solid core exists
        alpha = np.clip(0.5 - dist / softness, 0.0, 1.0)
    if rng.uniform() < 0.35:
        # carve a semi-transparent window, keeping part of the core solid
        wr, wtheta = _polar(size, cx + rng.uniform(-0.3, 0.3) * base, cy + rng.uniform(-0.3, 0.3) * base)
        window = wr < base * rng.uniform(0.3, 0.5)
        candidate = alpha.copy()
        candidate[window] *= rng.uniform(0.35, 0.75)
        if (candidate == 1.0).any():
            alpha = candidate
    if not ((alpha == 0.0).any() and (alpha == 1.0).any() and ((alpha > 0) & (alpha < 1)).any()):
        raise RuntimeError(f"degenerate procedural mask for seed {seed}")
    rgba = np.concatenate([_texture(size, rng), alpha[:, :, None]], axis=2)
    return ForegroundAsset(rgba=rgba, source_id=f"proc:{kind}:{seed}")


def procedural_background(seed: int, size: int = 64) -> BackgroundAsset:
    """Deterministic textured background with no salient object."""
    if size < 8:
        raise ValueError(f"size must be >= 8, got {size}")
    rng = np_rng(seed)
    kind = BG_KINDS[int(rng.integers(0, len(BG_KINDS)))]
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64) / size
    c0 = rng.uniform(0.05, 0.95, 3)
    c1 = rng.uniform(0.05, 0.95, 3)
    while np.abs(c0 - c1).max() < 0.25:
        c1 = rng.uniform(0.05, 0.95, 3)
    if kind == "gradient":
        direction = rng.uniform(0, 2 * np.pi)
        t = np.cos(direction) * xx + np.sin(direction) * yy
        t = (t - t.min()) / (t.max() - t.min())
        rgb = c0 + t[:, :, None] * (c1 - c0)
    elif kind == "stripes":
        direction = rng.uniform(0, 2 * np.pi)
        freq = rng.uniform(2.0, 6.0)
        t = 0.5 + 0.5 * np.sin(2 * np.pi * freq * (np.cos(direction) * xx + np.sin(direction) * yy))
        rgb = c0 + t[:, :, None] * (c1 - c0)
    else:
        coarse = rng.uniform(0.0, 1.0, (6, 6, 3))
        t = _upsample(coarse, size)
        rgb = c0 + t * (c1 - c0)
    rgb = np.clip(rgb + rng.normal(0.0, 0.01, rgb.shape), 0.0, 1.0)
    if rgb.var(axis=(0, 1)).sum() < 1e-3:
        raise RuntimeError(f"degenerate procedural background for seed {seed}")
    return BackgroundAsset(rgb=rgb, source_id=f"proc:{kind}:{seed}")


def _upsample(coarse: np.ndarray, size: int) -> np.ndarray:
    import cv2

    out = cv2.resize(coarse.astype(np.float32), (size, size), interpolation=cv2.INTER_CUBIC)
    return np.clip(out.astype(np.float64), 0.0, 1.0)
