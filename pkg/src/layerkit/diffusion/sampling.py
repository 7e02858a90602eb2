"""Deterministic coarse-step sampling.

The reverse pass visits a decimated timestep ladder T = t_0 > t_1 >
... > t_K = 0.  At each rung the velocity prediction is converted to a
clean-latent and noise estimate, and the latent is re-projected onto
the next rung's signal/noise mix with no fresh randomness, so the
output is a deterministic function of the initial noise (seed) and the
conditioning.
"""

from __future__ import annotations

import numpy as np
import torch

from .conditioning import ConditionPack
from .denoiser import DenoiserBundle


class UntrainedModelError(RuntimeError):
    """Sampling was requested from a model that never finished training."""


def sample_timesteps(total: int, steps: int) -> np.ndarray:
    """Evenly spaced descending ladder from total down to 0."""
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")
    if steps > total:
        raise ValueError(f"steps {steps} exceeds schedule length {total}")
    ladder = np.unique(np.round(np.linspace(0, total, steps + 1)).astype(np.int64))[::-1]
    return ladder


def sample_layer(
    bundle: DenoiserBundle,
    pack: ConditionPack,
    steps: int = 50,
    seed: int = 0,
) -> np.ndarray:
    """Run the reverse process; returns the sampled latent (h, w, c)."""
    if not bundle.trained:
        raise UntrainedModelError(f"branch {bundle.branch!r} denoiser is untrained")
    if pack.factor != bundle.factor:
        raise ValueError(f"conditioning factor {pack.factor} != model factor {bundle.factor}")
    if pack.latent_composite.shape[2] != bundle.latent_channels:
        raise ValueError(
            f"conditioning has {pack.latent_composite.shape[2]} latent channels, "
            f"model expects {bundle.latent_channels}"
        )
    h, w = pack.latent_composite.shape[:2]
    c = bundle.latent_channels
    ab = bundle.schedule.alpha_bar
    ladder = sample_timesteps(bundle.schedule.steps, steps)
    gen = torch.Generator().manual_seed(int(seed))
    cond = torch.from_numpy(
        np.ascontiguousarray(
            np.concatenate([pack.latent_composite, pack.alpha_packed], axis=2).transpose(2, 0, 1)
        )
    ).float()[None]
    z = torch.randn((1, c, h, w), generator=gen)
    bundle.module.eval()
    with torch.no_grad():
        for t_cur, t_next in zip(ladder[:-1], ladder[1:]):
            s_cur = float(np.sqrt(ab[t_cur]))
            sig_cur = float(np.sqrt(1.0 - ab[t_cur]))
            v = bundle.module(torch.cat([z, cond], dim=1), torch.tensor([int(t_cur)]))
            x0 = s_cur * z - sig_cur * v
            eps = sig_cur * z + s_cur * v
            s_next = float(np.sqrt(ab[t_next]))
            sig_next = float(np.sqrt(1.0 - ab[t_next]))
            z = s_next * x0 + sig_next * eps
    return z[0].numpy().transpose(1, 2, 0).astype(np.float64)
