"""Low-rank adapters for the autoencoder and the high-frequency GAN losses.

Each target conv kernel (out, in, kh, kw) is viewed as an (out) x (in*kh*kw)
matrix; the adapter holds factors A (rank x k) and B (m x rank) with B
zero-initialized, so a fresh adapter changes nothing. At inference the
encoder adapter is blended with weight ``alpha`` and the decoder adapter
with ``1 - alpha``.

The two adapters are trained against different objectives: an L1 match of
high-frequency content for the encoder, and a patch-discriminator
adversarial loss for the decoder. Base parameters always enter these
losses detached, so their gradients are structurally zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import torch
import torch.nn.functional as F
from torch import nn
from torch.func import functional_call

from .errors import ValidationError
from .freq import HFOperatorConfig, high_pass
from .grads import detached_call
from .restorer import LatentRestorer
from .vae import GaussianPosterior, ImageVAE, recon_l1

LOGIT_CLAMP = 20.0


@dataclass(frozen=True)
class AdapterTrainConfig:
    rank: int = 4
    scale: float = 1.0
    steps: int = 300
    batch_size: int = 8
    lr: float = 1e-3  # fidelity (encoder) adapter
    perception_lr: float | None = None  # decoder adapter; defaults to lr
    disc_lr: float = 1e-3
    disc_width: int = 32
    n_fidelity: int = 1
    n_perception: int = 1
    hf: HFOperatorConfig = HFOperatorConfig()
    fidelity_through_restorer: bool = False
    seed: int = 0
    log_every: int = 25

    def __post_init__(self):
        if self.n_fidelity < 1 or self.n_perception < 1:
            raise ValidationError("phase step counts must be >= 1")

    @property
    def effective_perception_lr(self) -> float:
        return self.lr if self.perception_lr is None else self.perception_lr


def conv_weight_shapes(module: nn.Module) -> dict[str, tuple[int, ...]]:
    """Kernel shapes of every conv layer in a module, by parameter name."""
    shapes = {}
    for name, sub in module.named_modules():
        if isinstance(sub, nn.Conv2d):
            shapes[f"{name}.weight" if name else "weight"] = tuple(sub.weight.shape)
    return shapes


class LowRankAdapter(nn.Module):
    """Per-layer low-rank weight deltas with a common rank and scale."""

    def __init__(
        self,
        layer_shapes: dict[str, tuple[int, ...]],
        rank: int = 4,
        scale: float = 1.0,
        seed: int = 0,
        init_std: float = 0.05,
        cap_rank: bool = False,
    ):
        super().__init__()
        if rank < 1:
            raise ValidationError(f"rank must be >= 1, got {rank}")
        self.layer_names = sorted(layer_shapes)
        self.layer_shapes = {k: tuple(layer_shapes[k]) for k in self.layer_names}
        self._index = {name: i for i, name in enumerate(self.layer_names)}
        self.rank = rank
        self.scale = scale
        gen = torch.Generator().manual_seed(seed)
        a_list, b_list = [], []
        for name in self.layer_names:
            shape = self.layer_shapes[name]
            m, k = shape[0], math.prod(shape[1:])
            if rank > min(m, k) and not cap_rank:
                raise ValidationError(
                    f"rank {rank} exceeds min dim {min(m, k)} of layer {name}"
                )
            r = min(rank, m, k)
            a = torch.empty(r, k).normal_(0.0, init_std, generator=gen)
            a_list.append(nn.Parameter(a))
            b_list.append(nn.Parameter(torch.zeros(m, r)))
        self.a_factors = nn.ParameterList(a_list)
        self.b_factors = nn.ParameterList(b_list)

    def delta(self, name: str) -> torch.Tensor:
        """Scaled low-rank update for one layer, in kernel shape."""
        i = self._index[name]
        return (self.scale * (self.b_factors[i] @ self.a_factors[i])).view(
            self.layer_shapes[name]
        )


def init_adapter(
    layer_shapes: dict[str, tuple[int, ...]],
    rank: int = 4,
    scale: float = 1.0,
    seed: int = 0,
) -> LowRankAdapter:
    return LowRankAdapter(layer_shapes, rank=rank, scale=scale, seed=seed)


def adapter_for(module: nn.Module, rank: int = 4, scale: float = 1.0, seed: int = 0) -> LowRankAdapter:
    """Adapter covering every conv in a module; rank capped per layer so
    narrow layers (e.g. an RGB output head) stay low-rank-valid."""
    return LowRankAdapter(conv_weight_shapes(module), rank=rank, scale=scale, seed=seed, cap_rank=True)


def effective_weights(
    module: nn.Module, adapter: LowRankAdapter | None, alpha: float
) -> dict[str, torch.Tensor]:
    """Detached base parameters with the adapter blended in at ``alpha``.

    The base module is never mutated; the result feeds functional calls.
    """
    params = {name: p.detach() for name, p in module.named_parameters()}
    params.update({name: b.detach() for name, b in module.named_buffers()})
    if adapter is not None:
        for name in adapter.layer_names:
            if name not in params:
                raise ValidationError(f"adapter layer {name!r} not found in module")
            if tuple(params[name].shape) != adapter.layer_shapes[name]:
                raise ValidationError(
                    f"adapter/base shape mismatch at {name!r}: "
                    f"{adapter.layer_shapes[name]} vs {tuple(params[name].shape)}"
                )
            delta = adapter.delta(name).to(params[name].dtype)
            params[name] = params[name] + alpha * delta
    return params


def adapted_call(
    module: nn.Module, adapter: LowRankAdapter | None, alpha: float, *args
):
    return functional_call(module, effective_weights(module, adapter, alpha), args)


def adapted_encode(
    vae: ImageVAE, adapter: LowRankAdapter | None, alpha: float, image: torch.Tensor
) -> GaussianPosterior:
    f = vae.cfg.downsample
    if image.shape[-1] % f or image.shape[-2] % f:
        raise ValidationError(f"spatial dims {tuple(image.shape[-2:])} not divisible by {f}")
    out = adapted_call(vae.encoder, adapter, alpha, image)
    mu, logvar = out.chunk(2, dim=1)
    return GaussianPosterior(mu=mu, logvar=logvar)


def adapted_decode(
    vae: ImageVAE, adapter: LowRankAdapter | None, alpha: float, z: torch.Tensor
) -> torch.Tensor:
    return adapted_call(vae.decoder, adapter, alpha, z)


class HFDiscriminator(nn.Module):
    """Patch discriminator over high-frequency maps: 4 strided convs to a
    per-patch logit map."""

    def __init__(self, in_channels: int = 3, width: int = 32):
        super().__init__()
        self.net = nn.Sequential(
            nn.Conv2d(in_channels, width, 4, stride=2, padding=1),
            nn.LeakyReLU(0.2),
            nn.Conv2d(width, width * 2, 4, stride=2, padding=1),
            nn.LeakyReLU(0.2),
            nn.Conv2d(width * 2, width * 4, 4, stride=2, padding=1),
            nn.LeakyReLU(0.2),
            nn.Conv2d(width * 4, 1, 4, stride=1, padding=1),
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.net(x)


def hf_fidelity_loss(
    vae: ImageVAE,
    enc_adapter: LowRankAdapter,
    deg: torch.Tensor,
    clean: torch.Tensor,
    hf_cfg: HFOperatorConfig = HFOperatorConfig(),
    restorer: LatentRestorer | None = None,
) -> torch.Tensor:
    """L1 between high-frequency content of the adapted reconstruction of a
    degraded input and that of the clean target.

    The degraded image passes through the adapted encoder and the frozen
    base decoder; by default the latent restorer is not in this path
    (``restorer`` inserts it for ablations). Gradients reach the encoder
    adapter only.
    """
    post = adapted_encode(vae, enc_adapter, 1.0, deg)
    z = post.mu
    if restorer is not None:
        z = detached_call(restorer, z)
    out = adapted_decode(vae, None, 0.0, z)
    return recon_l1(high_pass(out, hf_cfg), high_pass(clean, hf_cfg))


def hf_adversarial_loss(
    vae: ImageVAE,
    dec_adapter: LowRankAdapter,
    restorer: LatentRestorer,
    disc: HFDiscriminator,
    deg: torch.Tensor,
    hf_cfg: HFOperatorConfig = HFOperatorConfig(),
) -> torch.Tensor:
    """Non-saturating generator loss for the decoder adapter.

    The degraded input runs through the frozen encoder and restorer (as
    constants), then the adapted decoder; the loss rewards fooling the
    high-frequency patch discriminator. Gradients reach the decoder
    adapter only.
    """
    with torch.no_grad():
        z = vae.encode(deg).mu
        z_res = restorer(z)
    out = adapted_decode(vae, dec_adapter, 1.0, z_res)
    logits = detached_call(disc, high_pass(out, hf_cfg))
    return -F.logsigmoid(logits.clamp(-LOGIT_CLAMP, LOGIT_CLAMP)).mean()


def discriminator_loss(
    disc: HFDiscriminator,
    real_clean: torch.Tensor,
    fake_output: torch.Tensor,
    hf_cfg: HFOperatorConfig = HFOperatorConfig(),
) -> torch.Tensor:
    """Binary cross-entropy on high-frequency maps; the fake path is
    detached so generator parameters receive no gradient."""
    if real_clean.shape != fake_output.shape:
        raise ValidationError(
            f"shape mismatch: {tuple(real_clean.shape)} vs {tuple(fake_output.shape)}"
        )
    real_logits = disc(high_pass(real_clean, hf_cfg)).clamp(-LOGIT_CLAMP, LOGIT_CLAMP)
    fake_logits = disc(high_pass(fake_output.detach(), hf_cfg)).clamp(
        -LOGIT_CLAMP, LOGIT_CLAMP
    )
    return -(F.logsigmoid(real_logits).mean() + F.logsigmoid(-fake_logits).mean())
