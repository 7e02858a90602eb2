"""v-prediction training of the branch denoisers.

Each step draws samples, timesteps and noise, corrupts the target
layer's latent, and regresses the network output onto the velocity
target.  Both branches train identically; only the regression target
differs (foreground layer vs background layer).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import torch

from ..raster import reconstruction_error
from ..rearrange import pixel_unshuffle
from .denoiser import DenoiserBundle, new_denoiser
from .schedule import cosine_schedule


class TrainingDivergence(RuntimeError):
    """Loss left the finite range; training state is not usable."""


@dataclass
class FBDDTrainConfig:
    steps: int = 500
    batch_size: int = 8
    lr: float = 2e-4
    seed: int = 0
    base_width: int = 32
    stages: int = 3
    schedule_steps: int = 1000

    def __post_init__(self):
        if self.steps < 1 or self.batch_size < 1:
            raise ValueError("steps and batch_size must be >= 1")
        if self.lr <= 0:
            raise ValueError("lr must be positive")


def _to_torch(arr: np.ndarray) -> torch.Tensor:
    return torch.from_numpy(np.ascontiguousarray(arr.transpose(2, 0, 1))).float()


def prepare_tensors(samples, branch: str, codec, recomposition_tol: float = 1e-3):
    """Encode targets and conditioning once; returns (x0, cond) stacks.

    Each sample must recompose to its composite within tolerance;
    training on an inconsistent triple would regress the model onto
    layers that do not explain the observation.
    """
    if len(samples) == 0:
        raise ValueError("no training samples")
    x0s, conds = [], []
    for s in samples:
        err = reconstruction_error(s.composite, s.layered())
        if err > recomposition_tol:
            raise ValueError(
                f"sample {s.sample_id or s.seed} recomposes with MAD {err:.3g} > {recomposition_tol:.3g}"
            )
        target = s.foreground if branch == "fg" else s.background
        x0s.append(_to_torch(codec.encode(target)))
        cond = np.concatenate(
            [codec.encode(s.composite), pixel_unshuffle(s.alpha, codec.factor)], axis=2
        )
        conds.append(_to_torch(cond))
    return torch.stack(x0s), torch.stack(conds)


def train_step(
    bundle: DenoiserBundle,
    optimizer: torch.optim.Optimizer,
    x0: torch.Tensor,
    cond: torch.Tensor,
    generator: torch.Generator,
    alpha_bar: torch.Tensor,
) -> float:
    """One optimization step on a pre-assembled batch; returns the loss."""
    t = torch.randint(1, bundle.schedule.steps + 1, (x0.shape[0],), generator=generator)
    eps = torch.randn(x0.shape, generator=generator)
    ab = alpha_bar[t][:, None, None, None]
    s, sigma = torch.sqrt(ab), torch.sqrt(1.0 - ab)
    z_t = s * x0 + sigma * eps
    v = s * eps - sigma * x0
    pred = bundle.module(torch.cat([z_t, cond], dim=1), t)
    loss = torch.mean((pred - v) ** 2)
    if not torch.isfinite(loss):
        raise TrainingDivergence(f"non-finite loss (lr {optimizer.param_groups[0]['lr']})")
    optimizer.zero_grad()
    loss.backward()
    optimizer.step()
    return float(loss.detach())


def decayed_lr(base: float, step: int, total: int) -> float:
    """Cosine decay from base to base / 10 over the run."""
    return base * (0.1 + 0.45 * (1.0 + math.cos(math.pi * step / total)))


def train_fbdd(samples, branch: str, codec, config: FBDDTrainConfig = FBDDTrainConfig()):
    """Train one branch denoiser from scratch; returns (bundle, losses).

    The learning rate follows a cosine decay to a tenth of config.lr;
    the long denoiser runs need the annealing to settle.
    """
    if branch not in ("fg", "bg"):
        raise ValueError(f"branch must be 'fg' or 'bg', got {branch!r}")
    schedule = cosine_schedule(config.schedule_steps)
    bundle = new_denoiser(
        branch=branch,
        factor=codec.factor,
        latent_channels=codec.latent_channels,
        base_width=config.base_width,
        stages=config.stages,
        schedule=schedule,
        seed=config.seed,
    )
    x0, cond = prepare_tensors(samples, branch, codec)
    gen = torch.Generator().manual_seed(int(config.seed))
    alpha_bar = torch.from_numpy(schedule.alpha_bar).float()
    opt = torch.optim.Adam(bundle.module.parameters(), lr=config.lr)
    bundle.module.train()
    losses = []
    for step in range(config.steps):
        opt.param_groups[0]["lr"] = decayed_lr(config.lr, step, config.steps)
        idx = torch.randint(0, x0.shape[0], (config.batch_size,), generator=gen)
        try:
            losses.append(train_step(bundle, opt, x0[idx], cond[idx], gen, alpha_bar))
        except TrainingDivergence as e:
            raise TrainingDivergence(
                f"branch {branch} diverged at step {step}: {e}; last losses {losses[-5:]}"
            ) from e
    bundle.module.eval()
    bundle.trained = True
    bundle.train_meta = {
        "branch": branch,
        "steps": config.steps,
        "batch_size": config.batch_size,
        "lr": config.lr,
        "seed": config.seed,
        "samples": len(samples),
        "final_loss": losses[-1],
    }
    return bundle, losses
