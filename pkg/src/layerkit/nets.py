"""Small convolutional UNets shared by the denoisers and the aligners.

One architecture serves both uses: with a time embedding it is a
diffusion denoiser, without one it is a plain image-to-image refiner.
Widths double per stage; the output convolution starts at zero so an
untrained network is the identity-to-zero map.
"""

from __future__ import annotations

import math

import torch
import torch.nn as nn


def timestep_embedding(t: torch.Tensor, dim: int) -> torch.Tensor:
    """Sinusoidal features of integer timesteps, shape (B, dim)."""
    half = dim // 2
    freqs = torch.exp(-math.log(10000.0) * torch.arange(half, dtype=torch.float32) / max(half - 1, 1))
    args = t.float()[:, None] * freqs[None, :]
    emb = torch.cat([torch.cos(args), torch.sin(args)], dim=1)
    if dim % 2:
        emb = torch.cat([emb, torch.zeros_like(emb[:, :1])], dim=1)
    return emb


def _norm(channels: int) -> nn.GroupNorm:
    groups = 8 if channels % 8 == 0 else 1
    return nn.GroupNorm(groups, channels)


class ResBlock(nn.Module):
    def __init__(self, cin: int, cout: int, emb_dim: int | None = None):
        super().__init__()
        self.norm1 = _norm(cin)
        self.conv1 = nn.Conv2d(cin, cout, 3, padding=1)
        self.norm2 = _norm(cout)
        self.conv2 = nn.Conv2d(cout, cout, 3, padding=1)
        self.act = nn.SiLU()
        self.emb_proj = nn.Linear(emb_dim, cout) if emb_dim else None
        self.skip = nn.Conv2d(cin, cout, 1) if cin != cout else nn.Identity()

    def forward(self, x, emb=None):
        h = self.conv1(self.act(self.norm1(x)))
        if self.emb_proj is not None:
            if emb is None:
                raise ValueError("block built with a time embedding but none was passed")
            h = h + self.emb_proj(emb)[:, :, None, None]
        h = self.conv2(self.act(self.norm2(h)))
        return h + self.skip(x)


class UNet(nn.Module):
    """Conv UNet; pass emb_dim to enable timestep conditioning."""

    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        base_width: int = 32,
        stages: int = 3,
        emb_dim: int | None = None,
    ):
        super().__init__()
        if stages < 1:
            raise ValueError(f"stages must be >= 1, got {stages}")
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.base_width = base_width
        self.stages = stages
        self.emb_dim = emb_dim
        widths = [base_width * (2 ** i) for i in range(stages)]

        if emb_dim:
            self.time_mlp = nn.Sequential(
                nn.Linear(base_width, emb_dim), nn.SiLU(), nn.Linear(emb_dim, emb_dim)
            )
        else:
            self.time_mlp = None

        self.stem = nn.Conv2d(in_channels, widths[0], 3, padding=1)
        self.down_blocks = nn.ModuleList([ResBlock(w, w, emb_dim) for w in widths])
        self.downsamplers = nn.ModuleList(
            [nn.Conv2d(widths[i], widths[i + 1], 3, stride=2, padding=1) for i in range(stages - 1)]
        )
        self.middle = ResBlock(widths[-1], widths[-1], emb_dim)
        self.upsamplers = nn.ModuleList(
            [nn.Conv2d(widths[i + 1], widths[i], 3, padding=1) for i in reversed(range(stages - 1))]
        )
        self.up_blocks = nn.ModuleList(
            [ResBlock(2 * widths[i], widths[i], emb_dim) for i in reversed(range(stages - 1))]
        )
        self.head_norm = _norm(widths[0])
        self.head = nn.Conv2d(widths[0], out_channels, 3, padding=1)
        nn.init.zeros_(self.head.weight)
        nn.init.zeros_(self.head.bias)

    def forward(self, x: torch.Tensor, t: torch.Tensor | None = None) -> torch.Tensor:
        if x.shape[1] != self.in_channels:
            raise ValueError(f"expected {self.in_channels} input channels, got {x.shape[1]}")
        side = 2 ** (self.stages - 1)
        if x.shape[2] % side or x.shape[3] % side:
            raise ValueError(f"spatial dims {tuple(x.shape[2:])} must be divisible by {side}")
        emb = None
        if self.time_mlp is not None:
            if t is None:
                raise ValueError("network was built with timestep conditioning; pass t")
            emb = self.time_mlp(timestep_embedding(t, self.base_width))
        h = self.stem(x)
        skips = []
        for i, block in enumerate(self.down_blocks):
            h = block(h, emb)
            if i < self.stages - 1:
                skips.append(h)
                h = self.downsamplers[i](h)
        h = self.middle(h, emb)
        for up, block in zip(self.upsamplers, self.up_blocks):
            h = torch.nn.functional.interpolate(h, scale_factor=2, mode="nearest")
            h = up(h)
            h = block(torch.cat([h, skips.pop()], dim=1), emb)
        return self.head(torch.nn.functional.silu(self.head_norm(h)))


def build_unet(seed: int = 0, **kwargs) -> UNet:
    """Construct a UNet with deterministic initialization."""
    with torch.random.fork_rng():
        torch.manual_seed(int(seed))
        return UNet(**kwargs)


def parameter_count(module: nn.Module) -> int:
    return sum(p.numel() for p in module.parameters())
