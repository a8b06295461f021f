"""Variational autoencoder with a degradation-robust latent space.

The training objective combines the usual reconstruction + KL terms with
two regularizers: an invariance loss aligning latents of perturbed inputs
to frozen semantic features of the clean image, and an equivariance loss
requiring downsampled latents to decode into downsampled images. Inputs
are perturbed by the progressive strategy in :mod:`latres.degrade`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

from .arrays import to_nchw
from .degrade import PerturbConfig, Schedule, derive_seed, perturb
from .errors import ValidationError


@dataclass(frozen=True)
class VAEConfig:
    in_channels: int = 3
    widths: tuple[int, ...] = (32, 64, 128)
    latent_channels: int = 4
    downsample: int = 4

    def __post_init__(self):
        n = math.log2(self.downsample)
        if n != int(n) or self.downsample < 1:
            raise ValidationError(f"downsample must be a power of two, got {self.downsample}")
        if int(n) > len(self.widths):
            raise ValidationError("need at least log2(downsample) conv widths")


@dataclass
class GaussianPosterior:
    """Per-position mean and log-variance of the encoder's latent."""

    mu: torch.Tensor
    logvar: torch.Tensor

    def __post_init__(self):
        if self.mu.shape != self.logvar.shape:
            raise ValidationError(
                f"mu/logvar shapes differ: {tuple(self.mu.shape)} vs {tuple(self.logvar.shape)}"
            )


class Encoder(nn.Module):
    """Strided conv stack producing 2*latent_channels (mean, logvar) maps."""

    def __init__(self, cfg: VAEConfig):
        super().__init__()
        n_down = int(math.log2(cfg.downsample))
        convs = []
        ch = cfg.in_channels
        for i, w in enumerate(cfg.widths):
            convs.append(
                nn.Conv2d(
                    ch, w, 3, stride=2 if i < n_down else 1, padding=1,
                    padding_mode="replicate",
                )
            )
            ch = w
        self.convs = nn.ModuleList(convs)
        self.head = nn.Conv2d(ch, 2 * cfg.latent_channels, 3, padding=1, padding_mode="replicate")

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        for conv in self.convs:
            x = F.silu(conv(x))
        return self.head(x)


class Decoder(nn.Module):
    """Mirror stack of upsampling convs; fully convolutional, output in [0, 1]."""

    def __init__(self, cfg: VAEConfig):
        super().__init__()
        n_down = int(math.log2(cfg.downsample))
        widths = list(reversed(cfg.widths))
        pad = dict(padding=1, padding_mode="replicate")
        self.stem = nn.Conv2d(cfg.latent_channels, widths[0], 3, **pad)
        convs = []
        ups = []
        ch = widths[0]
        for i, w in enumerate(widths[1:]):
            convs.append(nn.Conv2d(ch, w, 3, **pad))
            ups.append(i < n_down)
            ch = w
        # one upsample per downsample stage even when the width list is short
        while sum(ups) < n_down:
            convs.append(nn.Conv2d(ch, ch, 3, **pad))
            ups.append(True)
        self.convs = nn.ModuleList(convs)
        self.upsample_flags = ups
        self.head = nn.Conv2d(ch, cfg.in_channels, 3, **pad)

    def forward(self, z: torch.Tensor) -> torch.Tensor:
        x = F.silu(self.stem(z))
        for conv, up in zip(self.convs, self.upsample_flags):
            if up:
                x = F.interpolate(x, scale_factor=2, mode="nearest")
            x = F.silu(conv(x))
        return torch.sigmoid(self.head(x))


class ImageVAE(nn.Module):
    def __init__(self, cfg: VAEConfig = VAEConfig()):
        super().__init__()
        self.cfg = cfg
        self.encoder = Encoder(cfg)
        self.decoder = Decoder(cfg)

    def encode(self, image: torch.Tensor) -> GaussianPosterior:
        f = self.cfg.downsample
        if image.shape[-1] % f or image.shape[-2] % f:
            raise ValidationError(
                f"spatial dims {tuple(image.shape[-2:])} not divisible by {f}"
            )
        out = self.encoder(image)
        mu, logvar = out.chunk(2, dim=1)
        return GaussianPosterior(mu=mu, logvar=logvar)

    def decode(self, z: torch.Tensor) -> torch.Tensor:
        return self.decoder(z)


def reparameterize(
    post: GaussianPosterior,
    generator: torch.Generator | None = None,
    deterministic: bool = False,
) -> torch.Tensor:
    """Sample z = mu + exp(logvar/2) * eps; returns mu when deterministic."""
    if deterministic:
        return post.mu
    eps = torch.randn(
        post.mu.shape, generator=generator, dtype=post.mu.dtype, device=post.mu.device
    )
    return post.mu + torch.exp(0.5 * post.logvar) * eps


def kl_loss(post: GaussianPosterior) -> torch.Tensor:
    """Mean per-element KL to the standard normal prior."""
    return torch.mean(0.5 * (post.mu**2 + torch.exp(post.logvar) - 1.0 - post.logvar))


def recon_l1(a: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
    if a.shape != b.shape:
        raise ValidationError(f"shape mismatch: {tuple(a.shape)} vs {tuple(b.shape)}")
    return torch.mean(torch.abs(a - b))


class FeaturePrior(nn.Module):
    """Frozen random conv feature extractor plus a trainable latent projector.

    The extractor maps a clean image to a feature map at the latent
    resolution; its weights are seeded at construction and never updated.
    The projector is a 1x1 conv from latent channels to the feature dim and
    is the only trainable part. Any module with the same ``features``
    signature can stand in as an external extractor.
    """

    def __init__(
        self,
        seed: int = 0,
        feature_dim: int = 256,
        in_channels: int = 3,
        latent_channels: int = 4,
        downsample: int = 4,
        widths: tuple[int, ...] = (32, 64, 128),
    ):
        super().__init__()
        self.seed = seed
        self.feature_dim = feature_dim
        n_down = int(math.log2(downsample))
        layers = []
        ch = in_channels
        for i, w in enumerate(list(widths) + [feature_dim]):
            layers.append(nn.Conv2d(ch, w, 3, stride=2 if i < n_down else 1, padding=1))
            ch = w
        self.extractor = nn.ModuleList(layers)
        gen = torch.Generator().manual_seed(seed)
        with torch.no_grad():
            for conv in self.extractor:
                fan_in = conv.weight.shape[1] * conv.weight.shape[2] * conv.weight.shape[3]
                conv.weight.normal_(0.0, (2.0 / fan_in) ** 0.5, generator=gen)
                conv.bias.zero_()
        for p in self.extractor.parameters():
            p.requires_grad_(False)
        self.projector = nn.Conv2d(latent_channels, feature_dim, 1)

    def features(self, image: torch.Tensor) -> torch.Tensor:
        """Frozen feature map of a clean image at the latent resolution."""
        with torch.no_grad():
            x = image
            for i, conv in enumerate(self.extractor):
                x = conv(x)
                if i < len(self.extractor) - 1:
                    x = torch.tanh(x)
        return x.detach()

    def feature_pyramid(self, image: torch.Tensor) -> list[torch.Tensor]:
        """Per-layer frozen feature maps, shallow (fine detail) to deep
        (semantics); the perceptual distance compares all of them."""
        maps = []
        with torch.no_grad():
            x = image
            for i, conv in enumerate(self.extractor):
                x = conv(x)
                if i < len(self.extractor) - 1:
                    x = torch.tanh(x)
                maps.append(x.detach())
        return maps


def semantic_features(prior: FeaturePrior, image: torch.Tensor) -> torch.Tensor:
    return prior.features(image)


def invariance_loss(
    z: torch.Tensor, target: torch.Tensor, prior: FeaturePrior
) -> torch.Tensor:
    """1 - mean spatial cosine between projected latents and target features."""
    proj = prior.projector(z)
    if proj.shape[-2:] != target.shape[-2:] or proj.shape[0] != target.shape[0]:
        raise ValidationError(
            f"spatial misalignment: {tuple(proj.shape)} vs {tuple(target.shape)}"
        )
    pn = proj.norm(dim=1)
    tn = target.norm(dim=1)
    valid = (pn > 0) & (tn > 0)
    if not bool(valid.any()):
        return proj.sum() * 0.0
    cos = (proj * target).sum(dim=1)[valid] / (pn[valid] * tn[valid])
    return 1.0 - cos.mean()


def equivariance_loss(
    vae: ImageVAE, z: torch.Tensor, clean: torch.Tensor, s: int
) -> torch.Tensor:
    """L1 between the decode of an s-times downsampled latent and the
    correspondingly downsampled clean image."""
    if s < 1:
        raise ValidationError(f"scale must be >= 1, got {s}")
    h, w = z.shape[-2], z.shape[-1]
    if h % s or w % s:
        raise ValidationError(f"scale {s} does not divide latent dims {(h, w)}")
    if s == 1:
        return recon_l1(vae.decode(z), clean)
    z_down = F.avg_pool2d(z, s)
    i_down = F.interpolate(clean, scale_factor=1.0 / s, mode="bilinear", align_corners=False)
    return recon_l1(vae.decode(z_down), i_down)


@dataclass(frozen=True)
class VAETrainConfig:
    steps: int = 600
    batch_size: int = 8
    lr: float = 1e-3
    lambda_kl: float = 1e-4
    lambda_inv: float = 0.5
    lambda_eqv: float = 1.0
    eqv_scales: tuple[int, ...] = (1, 2)
    perturb: PerturbConfig | None = None  # None -> ramps over the first half of steps
    arch: VAEConfig = field(default_factory=VAEConfig)
    feature_dim: int = 256
    prior_seed: int = 0
    seed: int = 0
    log_every: int = 50

    def __post_init__(self):
        if min(self.lambda_kl, self.lambda_inv, self.lambda_eqv) < 0:
            raise ValidationError("loss weights must be non-negative")

    def resolved_perturb(self) -> PerturbConfig:
        if self.perturb is not None:
            return self.perturb
        ramp = Schedule("linear", max(self.steps // 2, 1), 0.0, 1.0)
        return PerturbConfig(sev_schedule=ramp, beta_schedule=ramp)


def training_loss(
    vae: ImageVAE,
    prior: FeaturePrior,
    clean_batch: np.ndarray,
    paired_batch: np.ndarray | None,
    t: int,
    cfg: VAETrainConfig,
    seed: int,
) -> tuple[torch.Tensor, dict]:
    """Composite objective for one batch at step t.

    The clean path drives reconstruction, KL, and equivariance; a second
    encoder pass on the perturbed input drives the invariance term. All
    randomness (perturbation branches, latent noise, equivariance scale)
    derives from ``seed`` so the value is a pure function of parameters.
    """
    dtype = next(vae.parameters()).dtype
    pcfg = cfg.resolved_perturb()
    rng = np.random.default_rng(derive_seed(seed, "step"))
    perturbed = []
    branches = []
    for i in range(clean_batch.shape[0]):
        paired_i = None if paired_batch is None else paired_batch[i]
        img, tag = perturb(clean_batch[i], paired_i, t, pcfg, derive_seed(seed, "perturb", i))
        perturbed.append(img)
        branches.append(tag)
    clean = to_nchw(clean_batch, dtype)
    pert = to_nchw(np.stack(perturbed), dtype)

    gen = torch.Generator().manual_seed(derive_seed(seed, "reparam"))
    post = vae.encode(clean)
    z = reparameterize(post, generator=gen)
    l_rec = recon_l1(vae.decode(z), clean)
    l_kl = kl_loss(post)
    total = l_rec + cfg.lambda_kl * l_kl

    scale = int(rng.choice(list(cfg.eqv_scales)))
    l_eqv = 0.0
    if cfg.lambda_eqv > 0:
        l_eqv = equivariance_loss(vae, z, clean, scale)
        total = total + cfg.lambda_eqv * l_eqv

    l_inv = 0.0
    if cfg.lambda_inv > 0:
        post_p = vae.encode(pert)
        l_inv = invariance_loss(post_p.mu, prior.features(clean), prior)
        total = total + cfg.lambda_inv * l_inv

    parts = {
        "total": float(total.detach()),
        "recon_l1": float(l_rec.detach()),
        "kl": float(l_kl.detach()),
        "invariance": float(l_inv.detach()) if torch.is_tensor(l_inv) else l_inv,
        "equivariance": float(l_eqv.detach()) if torch.is_tensor(l_eqv) else l_eqv,
        "eqv_scale": scale,
        "branches": branches,
    }
    return total, parts
