"""Aligner bundles and the refine entry points.

An aligner sees the composite, the alpha mask and the sampled layer
estimate (7 channels) and predicts a correction that is added to the
estimate, so an untrained aligner passes its input through unchanged.
Refinement always finishes with the copy rule for the fully visible
region of its layer.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import torch

from ..nets import UNet, build_unet
from ..raster import ShapeError, as_alpha, as_image, region_copy

ROLES = ("fan", "ban")
IN_CHANNELS = 7  # composite(3) + alpha(1) + estimate(3)


class RoleError(ValueError):
    """An aligner was used for the wrong layer."""


@dataclass
class AlignBundle:
    module: UNet
    role: str
    loss_variant: str = "ban"
    trained: bool = False
    train_meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.role not in ROLES:
            raise RoleError(f"role must be one of {ROLES}, got {self.role!r}")
        if self.module.in_channels != IN_CHANNELS or self.module.out_channels != 3:
            raise ValueError(
                f"aligner must map {IN_CHANNELS} -> 3 channels, got "
                f"{self.module.in_channels} -> {self.module.out_channels}"
            )


def new_aligner(role: str, base_width: int = 32, stages: int = 3, seed: int = 0,
                loss_variant: str = "ban") -> AlignBundle:
    module = build_unet(
        seed=seed,
        in_channels=IN_CHANNELS,
        out_channels=3,
        base_width=base_width,
        stages=stages,
        emb_dim=None,
    )
    return AlignBundle(module=module, role=role, loss_variant=loss_variant)


def _refine(bundle: AlignBundle, composite_image, alpha, estimate, target: str) -> np.ndarray:
    img = as_image(composite_image, "composite")
    a = as_alpha(alpha)
    est = as_image(estimate, "estimate")
    if img.shape != est.shape:
        raise ShapeError(f"composite {img.shape} and estimate {est.shape} differ")
    if a.shape != img.shape[:2]:
        raise ShapeError(f"alpha {a.shape} does not match composite {img.shape[:2]}")
    stack = np.concatenate([img, a[:, :, None], est], axis=2)
    x = torch.from_numpy(np.ascontiguousarray(stack.transpose(2, 0, 1))).float()[None]
    bundle.module.eval()
    with torch.no_grad():
        delta = bundle.module(x)[0].numpy().transpose(1, 2, 0).astype(np.float64)
    refined = np.clip(est + delta, 0.0, 1.0)
    return region_copy(refined, img, a, target)


def fan_refine(bundle: AlignBundle, composite_image, alpha, fg_estimate) -> np.ndarray:
    """Refine a foreground estimate; visible foreground is copied exactly."""
    if bundle.role != "fan":
        raise RoleError(f"foreground refinement needs a 'fan' bundle, got {bundle.role!r}")
    return _refine(bundle, composite_image, alpha, fg_estimate, "fg")


def ban_refine(bundle: AlignBundle, composite_image, alpha, bg_estimate) -> np.ndarray:
    """Refine a background estimate; visible background is copied exactly."""
    if bundle.role != "ban":
        raise RoleError(f"background refinement needs a 'ban' bundle, got {bundle.role!r}")
    return _refine(bundle, composite_image, alpha, bg_estimate, "bg")
