"""Denoiser input assembly.

The channel layout of the denoiser input is frozen: noisy latent
first, then the latent composite, then the pixel-unshuffled alpha.
Checkpoints record the layout tag; mixing models with a different
layout is a hard error, not a silent misread.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..raster import ShapeError, as_alpha, as_image
from ..rearrange import pixel_unshuffle

CHANNEL_LAYOUT = "z|composite|alpha"
BRANCHES = ("fg", "bg")


class LayoutError(ValueError):
    """Condition channel layout does not match what a model expects."""


@dataclass(frozen=True)
class ConditionPack:
    """Per-image conditioning: latent composite plus packed alpha."""

    latent_composite: np.ndarray
    alpha_packed: np.ndarray
    factor: int

    def __post_init__(self):
        lc = np.asarray(self.latent_composite, dtype=np.float64)
        ap = np.asarray(self.alpha_packed, dtype=np.float64)
        object.__setattr__(self, "latent_composite", lc)
        object.__setattr__(self, "alpha_packed", ap)
        if lc.ndim != 3 or ap.ndim != 3:
            raise ShapeError("conditioning arrays must be (h, w, c)")
        if lc.shape[:2] != ap.shape[:2]:
            raise ShapeError(
                f"latent composite {lc.shape[:2]} and packed alpha {ap.shape[:2]} disagree"
            )
        r = int(self.factor)
        if ap.shape[2] != r * r:
            raise ShapeError(f"packed alpha has {ap.shape[2]} channels, expected {r * r}")

    @property
    def channels(self) -> int:
        return self.latent_composite.shape[2] + self.alpha_packed.shape[2]


def make_condition_pack(composite_image, alpha, codec) -> ConditionPack:
    """Encode the composite and pack the mask to latent resolution."""
    img = as_image(composite_image, "composite")
    a = as_alpha(alpha)
    if a.shape != img.shape[:2]:
        raise ShapeError(f"alpha {a.shape} does not match composite {img.shape[:2]}")
    return ConditionPack(
        latent_composite=codec.encode(img),
        alpha_packed=pixel_unshuffle(a, codec.factor),
        factor=codec.factor,
    )


def build_condition(z_t, pack: ConditionPack, layout: str = CHANNEL_LAYOUT) -> np.ndarray:
    """Concatenate [z_t | latent composite | packed alpha] along channels."""
    if layout != CHANNEL_LAYOUT:
        raise LayoutError(f"unsupported channel layout {layout!r}, this build uses {CHANNEL_LAYOUT!r}")
    z = np.asarray(z_t, dtype=np.float64)
    if z.ndim != 3:
        raise ShapeError(f"z_t must be (h, w, c), got {z.shape}")
    if z.shape[:2] != pack.latent_composite.shape[:2]:
        raise ShapeError(
            f"z_t {z.shape[:2]} does not match conditioning {pack.latent_composite.shape[:2]}"
        )
    return np.concatenate([z, pack.latent_composite, pack.alpha_packed], axis=2)


def input_channels(latent_channels: int, factor: int) -> int:
    """Denoiser input width under the frozen layout."""
    return 2 * latent_channels + factor * factor
