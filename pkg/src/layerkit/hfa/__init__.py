"""High-frequency-aware refinement of sampled layers.

Two small aligners clean up what the diffusion stage produces: the
foreground aligner (trained with plain MSE) and the background aligner
(trained with MSE to ground truth plus a weighted high-frequency match
to the sampled background, which suppresses copy-paste seams at the
occlusion boundary).  Both end with the visible-region copy rules.
"""

from .refine import AlignBundle, RoleError, ban_refine, fan_refine, new_aligner
from .losses import BANLossConfig, BANLossParts, ban_loss, fan_loss
from .training import BAN_VARIANTS, HFATrainConfig, train_hfa
from .ablation import (
    degraded_background_estimate,
    degraded_layer_estimate,
    paired_sign_test,
    run_ban_ablation,
)
from .checkpoint import load_aligner, save_aligner

__all__ = [
    "AlignBundle",
    "RoleError",
    "ban_refine",
    "fan_refine",
    "new_aligner",
    "BANLossConfig",
    "BANLossParts",
    "ban_loss",
    "fan_loss",
    "BAN_VARIANTS",
    "HFATrainConfig",
    "train_hfa",
    "degraded_background_estimate",
    "degraded_layer_estimate",
    "paired_sign_test",
    "run_ban_ablation",
    "load_aligner",
    "save_aligner",
]
