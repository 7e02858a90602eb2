"""Aligner training with selectable background objectives.

Variants, all trained with the same data/seed/steps so they compare:

* "ban":        MSE to ground truth + weighted high-frequency match to
                the sampled estimate (the default objective)
* "mse":        MSE to ground truth only
* "regionwise": MSE to ground truth where the background is visible,
                MSE to the sampled estimate where it is occluded

The torch high-frequency term mirrors layerkit.haar exactly (same
subband definitions and per-subband normalization), averaged over the
batch.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch

from ..raster import EPS_VIS, reconstruction_error
from .refine import AlignBundle, new_aligner

BAN_VARIANTS = ("ban", "mse", "regionwise")


@dataclass
class HFATrainConfig:
    steps: int = 500
    batch_size: int = 8
    lr: float = 2e-4
    seed: int = 0
    base_width: int = 32
    stages: int = 3
    ban_weight: float = 0.2
    hf_scales: tuple = (0, 1, 2)

    def __post_init__(self):
        if self.steps < 1 or self.batch_size < 1:
            raise ValueError("steps and batch_size must be >= 1")
        if self.ban_weight < 0:
            raise ValueError("ban_weight must be >= 0")


def haar_details_torch(x: torch.Tensor, levels: int):
    """Detail subbands of a (B, C, H, W) batch, finest scale first."""
    a = x
    out = []
    for _ in range(levels):
        p = a[:, :, 0::2, 0::2]
        q = a[:, :, 0::2, 1::2]
        r = a[:, :, 1::2, 0::2]
        s = a[:, :, 1::2, 1::2]
        out.append(((p - q + r - s) / 2, (p + q - r - s) / 2, (p - q - r + s) / 2))
        a = (p + q + r + s) / 2
    return out


def hf_loss_torch(x: torch.Tensor, y: torch.Tensor, scales) -> torch.Tensor:
    """Batch mean of the per-image high-frequency loss."""
    levels = max(scales) + 1
    h, w = x.shape[2], x.shape[3]
    dx = haar_details_torch(x, levels)
    dy = haar_details_torch(y, levels)
    total = torch.zeros((), dtype=x.dtype)
    for s in scales:
        n_s = (h >> (s + 1)) * (w >> (s + 1))
        for bx, by in zip(dx[s], dy[s]):
            total = total + torch.sum((bx - by) ** 2, dim=(1, 2, 3)).mean() / n_s
    return total


def _region_mse(pred, target, mask):
    weight = mask.sum()
    if float(weight) == 0.0:
        return torch.zeros((), dtype=pred.dtype)
    return torch.sum(mask * (pred - target) ** 2) / (weight * pred.shape[1])


def ban_objective_torch(pred, target, sampled, occluded, variant: str, weight: float, scales) -> torch.Tensor:
    if variant == "ban":
        return torch.mean((pred - target) ** 2) + weight * hf_loss_torch(pred, sampled, scales)
    if variant == "mse":
        return torch.mean((pred - target) ** 2)
    if variant == "regionwise":
        visible = 1.0 - occluded
        return _region_mse(pred, target, visible) + _region_mse(pred, sampled, occluded)
    raise ValueError(f"unknown variant {variant!r}, expected one of {BAN_VARIANTS}")


def _stack_images(arrs) -> torch.Tensor:
    return torch.stack([
        torch.from_numpy(np.ascontiguousarray(a.transpose(2, 0, 1))).float() for a in arrs
    ])


def train_hfa(samples, estimates, role: str, config: HFATrainConfig = HFATrainConfig(),
              loss_variant: str | None = None):
    """Train one aligner; returns (bundle, losses).

    estimates holds the sampled layer per training sample, aligned by
    index with samples (the decomposition stage's output for that
    layer).  Missing or extra entries are an error.
    """
    if role not in ("fan", "ban"):
        raise ValueError(f"role must be 'fan' or 'ban', got {role!r}")
    if len(samples) == 0:
        raise ValueError("no training samples")
    if len(estimates) != len(samples):
        raise ValueError(
            f"{len(samples)} samples but {len(estimates)} cached estimates; "
            "run the decomposition stage over the full corpus first"
        )
    if role == "fan":
        variant = "mse" if loss_variant is None else loss_variant
        if variant != "mse":
            raise ValueError(f"foreground aligner trains with plain MSE, got {loss_variant!r}")
    else:
        variant = "ban" if loss_variant is None else loss_variant
        if variant not in BAN_VARIANTS:
            raise ValueError(f"unknown variant {loss_variant!r}, expected one of {BAN_VARIANTS}")

    for i, (s, est) in enumerate(zip(samples, estimates)):
        if est is None:
            raise ValueError(f"missing cached estimate for sample index {i}")
        if reconstruction_error(s.composite, s.layered()) > 1e-3:
            raise ValueError(f"sample index {i} does not recompose")

    targets = _stack_images([s.foreground if role == "fan" else s.background for s in samples])
    sampled = _stack_images(list(estimates))
    comps = _stack_images([s.composite for s in samples])
    alphas = torch.stack([torch.from_numpy(s.alpha).float()[None] for s in samples])
    occluded = (alphas >= 1.0 - EPS_VIS).float()
    inputs = torch.cat([comps, alphas, sampled], dim=1)

    bundle = new_aligner(role, config.base_width, config.stages, seed=config.seed, loss_variant=variant)
    gen = torch.Generator().manual_seed(int(config.seed))
    opt = torch.optim.Adam(bundle.module.parameters(), lr=config.lr)
    bundle.module.train()
    losses = []
    for step in range(config.steps):
        idx = torch.randint(0, inputs.shape[0], (config.batch_size,), generator=gen)
        pred = sampled[idx] + bundle.module(inputs[idx])
        loss = ban_objective_torch(
            pred, targets[idx], sampled[idx], occluded[idx], variant, config.ban_weight, config.hf_scales
        )
        if not torch.isfinite(loss):
            raise RuntimeError(f"{role} aligner ({variant}) diverged at step {step}")
        opt.zero_grad()
        loss.backward()
        opt.step()
        losses.append(float(loss.detach()))
    bundle.module.eval()
    bundle.trained = True
    bundle.train_meta = {
        "role": role,
        "variant": variant,
        "steps": config.steps,
        "batch_size": config.batch_size,
        "lr": config.lr,
        "seed": config.seed,
        "samples": len(samples),
        "final_loss": losses[-1],
    }
    return bundle, losses
