"""Noise schedule and v-parameterization identities.

A schedule stores the cumulative signal fraction alpha_bar[t] for
t = 0..T with alpha_bar[0] = 1 (no noise) decreasing strictly to
nearly 0 at t = T.  Signal and noise scales are

    s_t = sqrt(alpha_bar[t])        sigma_t = sqrt(1 - alpha_bar[t])

and satisfy s_t^2 + sigma_t^2 = 1.  The network predicts the velocity

    v = s_t * eps - sigma_t * x0

from which both the clean latent and the noise are recovered exactly:

    x0  = s_t * z_t - sigma_t * v
    eps = sigma_t * z_t + s_t * v

At t = 0 the velocity equals the noise; in the alpha_bar -> 0 limit it
equals -x0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class DiffusionSchedule:
    """Monotone cumulative signal fractions, one entry per timestep 0..T."""

    alpha_bar: np.ndarray

    def __post_init__(self):
        ab = np.asarray(self.alpha_bar, dtype=np.float64)
        object.__setattr__(self, "alpha_bar", ab)
        if ab.ndim != 1 or ab.size < 2:
            raise ValueError(f"alpha_bar must be 1-D with >= 2 entries, got shape {ab.shape}")
        if ab[0] < 0.99 or ab[0] > 1.0:
            raise ValueError(f"alpha_bar[0] = {ab[0]} is not close to 1")
        if ab[-1] > 0.05:
            raise ValueError(f"alpha_bar[-1] = {ab[-1]} is not close to 0")
        if ab.min() <= 0.0 or ab.max() > 1.0:
            raise ValueError("alpha_bar values must lie in (0, 1]")
        if not (np.diff(ab) < 0).all():
            raise ValueError("alpha_bar must be strictly decreasing")

    @property
    def steps(self) -> int:
        return self.alpha_bar.size - 1

    def check_t(self, t: int) -> int:
        t = int(t)
        if t < 0 or t > self.steps:
            raise ValueError(f"t = {t} outside [0, {self.steps}]")
        return t

    def signal(self, t: int) -> float:
        return float(np.sqrt(self.alpha_bar[self.check_t(t)]))

    def noise(self, t: int) -> float:
        return float(np.sqrt(1.0 - self.alpha_bar[self.check_t(t)]))


def cosine_schedule(steps: int = 1000, offset: float = 0.008) -> DiffusionSchedule:
    """Squared-cosine alpha_bar with per-step increments capped at 0.999."""
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")
    u = np.arange(steps + 1, dtype=np.float64) / steps
    f = np.cos((u + offset) / (1.0 + offset) * np.pi / 2.0) ** 2
    raw = f / f[0]
    betas = np.clip(1.0 - raw[1:] / raw[:-1], 0.0, 0.999)
    alpha_bar = np.concatenate([[1.0], np.cumprod(1.0 - betas)])
    return DiffusionSchedule(alpha_bar=alpha_bar)


def v_from_alpha_bar(x0: np.ndarray, eps: np.ndarray, alpha_bar: float) -> np.ndarray:
    """Velocity target at an arbitrary signal fraction in [0, 1]."""
    if not 0.0 <= alpha_bar <= 1.0:
        raise ValueError(f"alpha_bar = {alpha_bar} outside [0, 1]")
    s = np.sqrt(alpha_bar)
    sigma = np.sqrt(1.0 - alpha_bar)
    return s * np.asarray(eps) - sigma * np.asarray(x0)


def v_target(x0: np.ndarray, eps: np.ndarray, t: int, schedule: DiffusionSchedule) -> np.ndarray:
    return v_from_alpha_bar(x0, eps, float(schedule.alpha_bar[schedule.check_t(t)]))


def noisy_latent(x0: np.ndarray, eps: np.ndarray, t: int, schedule: DiffusionSchedule) -> np.ndarray:
    """Forward corruption z_t = s_t * x0 + sigma_t * eps."""
    t = schedule.check_t(t)
    return schedule.signal(t) * np.asarray(x0) + schedule.noise(t) * np.asarray(eps)


def recover_x0(z_t: np.ndarray, v: np.ndarray, t: int, schedule: DiffusionSchedule) -> np.ndarray:
    t = schedule.check_t(t)
    return schedule.signal(t) * np.asarray(z_t) - schedule.noise(t) * np.asarray(v)


def recover_eps(z_t: np.ndarray, v: np.ndarray, t: int, schedule: DiffusionSchedule) -> np.ndarray:
    t = schedule.check_t(t)
    return schedule.noise(t) * np.asarray(z_t) + schedule.signal(t) * np.asarray(v)
