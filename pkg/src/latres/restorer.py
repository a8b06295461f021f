"""Latent-space restoration network and its training loop.

The restorer maps a degraded latent to a clean one at latent resolution.
Its final layer is zero-initialized and a global residual connection is
used, so a fresh restorer is exactly the identity map. Training drives an
L1 loss on the decoded output while the autoencoder stays frozen.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn.functional as F
from torch import nn

from .errors import ValidationError
from .grads import detached_call
from .vae import ImageVAE, recon_l1


@dataclass(frozen=True)
class RestorerConfig:
    latent_channels: int = 4
    width: int = 64
    blocks: int = 6


class LatentRestorer(nn.Module):
    def __init__(self, cfg: RestorerConfig = RestorerConfig()):
        super().__init__()
        self.cfg = cfg
        pad = dict(padding=1, padding_mode="replicate")
        self.stem = nn.Conv2d(cfg.latent_channels, cfg.width, 3, **pad)
        self.blocks = nn.ModuleList(
            [
                nn.Sequential(
                    nn.Conv2d(cfg.width, cfg.width, 3, **pad),
                    nn.SiLU(),
                    nn.Conv2d(cfg.width, cfg.width, 3, **pad),
                )
                for _ in range(cfg.blocks)
            ]
        )
        self.head = nn.Conv2d(cfg.width, cfg.latent_channels, 3, **pad)
        with torch.no_grad():
            self.head.weight.zero_()
            self.head.bias.zero_()

    def forward(self, z: torch.Tensor) -> torch.Tensor:
        if z.shape[1] != self.cfg.latent_channels:
            raise ValidationError(
                f"expected {self.cfg.latent_channels} latent channels, got {z.shape[1]}"
            )
        h = F.silu(self.stem(z))
        for block in self.blocks:
            h = h + block(h)
        return z + self.head(h)


def restore_latent(restorer: LatentRestorer, z_deg: torch.Tensor) -> torch.Tensor:
    return restorer(z_deg)


def restoration_loss(
    restorer: LatentRestorer,
    vae: ImageVAE,
    z_deg: torch.Tensor,
    clean: torch.Tensor,
) -> torch.Tensor:
    """L1 between the decoded restored latent and the clean image.

    The decoder runs with detached parameters, so gradients reach the
    restorer only.
    """
    out = detached_call(vae.decoder, restorer(z_deg))
    return recon_l1(out, clean)
