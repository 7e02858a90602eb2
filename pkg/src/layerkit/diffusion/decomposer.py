"""Full decomposition: composite plus alpha in, two layers out."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..raster import ShapeError, as_alpha, as_image
from ..seeding import spawn_seeds
from .conditioning import make_condition_pack
from .denoiser import DenoiserBundle
from .sampling import sample_layer


@dataclass
class FBDDModels:
    """Codec plus the two branch denoisers."""

    codec: object
    fg: DenoiserBundle
    bg: DenoiserBundle

    def __post_init__(self):
        if self.fg.branch != "fg" or self.bg.branch != "bg":
            raise ValueError(
                f"bundle branches are ({self.fg.branch!r}, {self.bg.branch!r}), expected ('fg', 'bg')"
            )
        for bundle in (self.fg, self.bg):
            if bundle.factor != self.codec.factor or bundle.latent_channels != self.codec.latent_channels:
                raise ValueError(
                    f"{bundle.branch} denoiser (f={bundle.factor}, c={bundle.latent_channels}) does not "
                    f"match codec (f={self.codec.factor}, c={self.codec.latent_channels})"
                )


def decompose(
    composite_image,
    alpha,
    models: FBDDModels,
    steps: int = 50,
    seed: int = 0,
) -> tuple:
    """Sample (foreground, background) images for one composite.

    The two branches run from independent noise derived from the seed.
    Outputs are decoded and clipped to [0, 1]; the caller applies any
    refinement and the visible-region copy rules.
    """
    img = as_image(composite_image, "composite")
    a = as_alpha(alpha)
    if a.shape != img.shape[:2]:
        raise ShapeError(f"alpha {a.shape} does not match composite {img.shape[:2]}")
    f = models.codec.factor
    if img.shape[0] % f or img.shape[1] % f:
        raise ShapeError(f"composite dims {img.shape[:2]} not divisible by codec factor {f}")
    pack = make_condition_pack(img, a, models.codec)
    fg_seed, bg_seed = spawn_seeds(seed, 2)
    fg_latent = sample_layer(models.fg, pack, steps=steps, seed=fg_seed)
    bg_latent = sample_layer(models.bg, pack, steps=steps, seed=bg_seed)
    fg = np.clip(models.codec.decode(fg_latent), 0.0, 1.0)
    bg = np.clip(models.codec.decode(bg_latent), 0.0, 1.0)
    return fg, bg
