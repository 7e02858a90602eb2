"""Denoiser bundle: network plus everything needed to run it correctly."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..nets import UNet, build_unet
from .conditioning import BRANCHES, CHANNEL_LAYOUT, input_channels
from .schedule import DiffusionSchedule, cosine_schedule


@dataclass
class DenoiserBundle:
    """A branch denoiser with its schedule, layout tag and provenance.

    The two branches (foreground, background) share this structure and
    architecture but never weights.
    """

    module: UNet
    branch: str
    factor: int
    latent_channels: int
    schedule: DiffusionSchedule
    layout: str = CHANNEL_LAYOUT
    trained: bool = False
    train_meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.branch not in BRANCHES:
            raise ValueError(f"branch must be one of {BRANCHES}, got {self.branch!r}")
        expected = input_channels(self.latent_channels, self.factor)
        if self.module.in_channels != expected:
            raise ValueError(
                f"denoiser takes {self.module.in_channels} channels but layout "
                f"{self.layout!r} with c={self.latent_channels}, f={self.factor} needs {expected}"
            )
        if self.module.out_channels != self.latent_channels:
            raise ValueError(
                f"denoiser emits {self.module.out_channels} channels, latent has {self.latent_channels}"
            )


def new_denoiser(
    branch: str,
    factor: int,
    latent_channels: int,
    base_width: int = 32,
    stages: int = 3,
    schedule: DiffusionSchedule | None = None,
    seed: int = 0,
) -> DenoiserBundle:
    """Fresh untrained bundle with deterministic initialization."""
    module = build_unet(
        seed=seed,
        in_channels=input_channels(latent_channels, factor),
        out_channels=latent_channels,
        base_width=base_width,
        stages=stages,
        emb_dim=4 * base_width,
    )
    return DenoiserBundle(
        module=module,
        branch=branch,
        factor=int(factor),
        latent_channels=int(latent_channels),
        schedule=schedule if schedule is not None else cosine_schedule(),
    )
