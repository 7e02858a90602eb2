"""Aligner loss definitions (numpy side, for evaluation and reporting).

The background aligner loss combines fidelity with seam suppression:

    L = MSE(pred, background_gt) + weight * L_HF(pred, background_sampled)

The high-frequency term pulls the prediction's detail subbands toward
the sampled background rather than the ground truth: the sampler tends
to drift in color but stay structurally smooth where occluded, and
matching its frequency content avoids stitching a sharp gt/estimate
boundary into the output.  The foreground aligner uses plain MSE over
the full frame.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..haar import HFConfig, high_frequency_loss
from ..raster import ShapeError


@dataclass(frozen=True)
class BANLossConfig:
    weight: float = 0.2
    hf: HFConfig = field(default_factory=HFConfig)

    def __post_init__(self):
        if self.weight < 0:
            raise ValueError(f"weight must be >= 0, got {self.weight}")


@dataclass(frozen=True)
class BANLossParts:
    total: float
    mse: float
    high_frequency: float


def _mse(a, b) -> float:
    x = np.asarray(a, dtype=np.float64)
    y = np.asarray(b, dtype=np.float64)
    if x.shape != y.shape:
        raise ShapeError(f"shapes differ: {x.shape} vs {y.shape}")
    return float(np.mean((x - y) ** 2))


def fan_loss(pred, target) -> float:
    """Foreground aligner objective: uniform MSE."""
    return _mse(pred, target)


def ban_loss(pred, target, sampled, config: BANLossConfig = BANLossConfig()) -> BANLossParts:
    """Background aligner objective; returns the parts for reporting."""
    mse = _mse(pred, target)
    hf = high_frequency_loss(pred, sampled, config.hf)
    return BANLossParts(total=mse + config.weight * hf, mse=mse, high_frequency=hf)
