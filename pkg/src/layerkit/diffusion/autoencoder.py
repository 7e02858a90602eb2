"""Latent codecs: map images to the space the denoisers work in.

IdentityAutoencoder keeps pixels (shifted to [-1, 1]); its factor is 1,
so diffusion runs at full resolution.  ConvAutoencoder compresses by a
spatial factor f into latent_channels channels and is trained with a
plain reconstruction loss.  Both expose the same encode/decode numpy
contract: images are (H, W, C) floats in [0, 1], latents are
(H/f, W/f, c) floats.
"""

from __future__ import annotations

import numpy as np
import torch
import torch.nn as nn

from ..raster import ShapeError, as_image


class IdentityAutoencoder:
    """Pixel-space stand-in codec; decode(encode(x)) == x exactly."""

    def __init__(self, channels: int = 3):
        self.factor = 1
        self.latent_channels = channels
        self.trained = True

    def encode(self, image) -> np.ndarray:
        img = as_image(image)
        if img.shape[2] != self.latent_channels:
            raise ShapeError(f"expected {self.latent_channels} channels, got {img.shape[2]}")
        return 2.0 * img - 1.0

    def decode(self, latent) -> np.ndarray:
        z = np.asarray(latent, dtype=np.float64)
        if z.ndim != 3 or z.shape[2] != self.latent_channels:
            raise ShapeError(f"expected (h, w, {self.latent_channels}) latent, got {z.shape}")
        return np.clip((z + 1.0) / 2.0, 0.0, 1.0)


class _ConvCodecNet(nn.Module):
    def __init__(self, factor: int, latent_channels: int, width: int):
        super().__init__()
        self.unshuffle = nn.PixelUnshuffle(factor)
        self.shuffle = nn.PixelShuffle(factor)
        packed = 3 * factor * factor
        self.encoder = nn.Sequential(
            nn.Conv2d(packed, width, 3, padding=1),
            nn.SiLU(),
            nn.Conv2d(width, width, 3, padding=1),
            nn.SiLU(),
            nn.Conv2d(width, latent_channels, 3, padding=1),
        )
        self.decoder = nn.Sequential(
            nn.Conv2d(latent_channels, width, 3, padding=1),
            nn.SiLU(),
            nn.Conv2d(width, width, 3, padding=1),
            nn.SiLU(),
            nn.Conv2d(width, packed, 3, padding=1),
        )

    def encode(self, x):
        return self.encoder(self.unshuffle(x))

    def decode(self, z):
        return self.shuffle(self.decoder(z))


class ConvAutoencoder:
    """Learned spatial compressor with deterministic initialization."""

    def __init__(self, factor: int = 4, latent_channels: int = 4, width: int = 64, seed: int = 0):
        if factor < 1:
            raise ValueError(f"factor must be >= 1, got {factor}")
        self.factor = int(factor)
        self.latent_channels = int(latent_channels)
        self.width = int(width)
        self.trained = False
        with torch.random.fork_rng():
            torch.manual_seed(int(seed))
            self.net = _ConvCodecNet(self.factor, self.latent_channels, width)
        self.net.eval()

    def _check_dims(self, h: int, w: int) -> None:
        if h % self.factor or w % self.factor:
            raise ShapeError(f"spatial dims {(h, w)} not divisible by factor {self.factor}")

    def encode(self, image) -> np.ndarray:
        img = as_image(image)
        if img.shape[2] != 3:
            raise ShapeError(f"codec expects RGB, got {img.shape[2]} channels")
        self._check_dims(*img.shape[:2])
        x = torch.from_numpy((2.0 * img - 1.0).transpose(2, 0, 1)[None]).float()
        with torch.no_grad():
            z = self.net.encode(x)
        return z[0].numpy().transpose(1, 2, 0).astype(np.float64)

    def decode(self, latent) -> np.ndarray:
        z = np.asarray(latent, dtype=np.float64)
        if z.ndim != 3 or z.shape[2] != self.latent_channels:
            raise ShapeError(f"expected (h, w, {self.latent_channels}) latent, got {z.shape}")
        zt = torch.from_numpy(z.transpose(2, 0, 1)[None]).float()
        with torch.no_grad():
            x = self.net.decode(zt)
        img = (x[0].numpy().transpose(1, 2, 0).astype(np.float64) + 1.0) / 2.0
        return np.clip(img, 0.0, 1.0)


def train_autoencoder(
    codec: ConvAutoencoder,
    images,
    steps: int = 2000,
    batch_size: int = 8,
    lr: float = 2e-3,
    seed: int = 0,
) -> list:
    """Reconstruction training; returns the per-step loss trace."""
    if not images:
        raise ValueError("no training images")
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")
    data = torch.stack([
        torch.from_numpy((2.0 * as_image(im) - 1.0).transpose(2, 0, 1)).float() for im in images
    ])
    gen = torch.Generator().manual_seed(int(seed))
    codec.net.train()
    opt = torch.optim.Adam(codec.net.parameters(), lr=lr)
    losses = []
    for step in range(steps):
        idx = torch.randint(0, data.shape[0], (batch_size,), generator=gen)
        batch = data[idx]
        recon = codec.net.decode(codec.net.encode(batch))
        loss = torch.mean((recon - batch) ** 2)
        if not torch.isfinite(loss):
            raise RuntimeError(f"autoencoder loss diverged at step {step}")
        opt.zero_grad()
        loss.backward()
        opt.step()
        losses.append(float(loss.detach()))
    codec.net.eval()
    codec.trained = True
    return losses
