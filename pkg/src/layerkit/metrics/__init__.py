"""Evaluation metrics for decomposed layers.

Pixel errors (MAD/MSE/SAD), foreground placement statistics, two-class
mask IoU, a boundary seam score for background plausibility, and
embedding-space distribution distances.  Raw values everywhere;
display scaling happens only in report assembly.
"""

from .errors import LayerErrors, layer_errors, psnr
from .fg_stats import FgStats, fg_stats, fg_stats_summary
from .miou import fg_miou
from .seam import seam_metric
from .distributional import (
    DistributionDistance,
    GrayPatchEmbedder,
    distribution_distance,
    frechet_distance,
    kernel_distance,
)
from .perceptual import perceptual_distance
from .report import DISPLAY_SCALES, build_report, display_row, write_report

__all__ = [
    "LayerErrors",
    "layer_errors",
    "psnr",
    "FgStats",
    "fg_stats",
    "fg_stats_summary",
    "fg_miou",
    "seam_metric",
    "DistributionDistance",
    "GrayPatchEmbedder",
    "distribution_distance",
    "frechet_distance",
    "kernel_distance",
    "perceptual_distance",
    "DISPLAY_SCALES",
    "build_report",
    "display_row",
    "write_report",
]
