"""layerkit: synthesis and decomposition of layered images.

An image C with a foreground layer F, a background layer B and an alpha
mask a satisfies C = a * F + (1 - a) * B pixelwise.  This package builds
synthetic layered datasets, trains conditional latent-diffusion models
that invert the composition, refines their outputs with
frequency-aware alignment networks, and evaluates everything against
classical optimization baselines.

Heavy submodules (anything importing torch) are not pulled in here;
import layerkit.diffusion / layerkit.hfa / layerkit.pipeline directly.
"""

from .raster import (
    EPS_VIS,
    LayeredImage,
    ShapeError,
    composite,
    dequantize,
    quantize,
    reconstruction_error,
    region_copy,
)
from .rearrange import pixel_shuffle, pixel_unshuffle
from .trimap import make_trimap, refine_trimap_transparency
from .haar import HaarPyramid, HFConfig, haar_decompose, haar_reconstruct, high_frequency_loss

__all__ = [
    "EPS_VIS",
    "LayeredImage",
    "ShapeError",
    "composite",
    "dequantize",
    "quantize",
    "reconstruction_error",
    "region_copy",
    "pixel_shuffle",
    "pixel_unshuffle",
    "make_trimap",
    "refine_trimap_transparency",
    "HaarPyramid",
    "HFConfig",
    "haar_decompose",
    "haar_reconstruct",
    "high_frequency_loss",
]

__version__ = "0.1.0"
