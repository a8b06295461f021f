"""Training loops for the three phases: autoencoder, latent restorer,
and the pair of high-frequency adapters.

Every loop is deterministic given its config seed: module init happens
under a seeded global RNG and all sampling goes through explicit
generators. Frozen components are never registered with an optimizer and
additionally enter losses detached, so their checkpointed bytes cannot
change.
"""

from __future__ import annotations

import dataclasses
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from . import serialization
from .checkpoint import CheckpointBundle, state_blobs
from .dataset import RestorationDataset
from .degrade import derive_seed
from .errors import ConfigurationError, TrainingDiverged, ValidationError
from .freq import HFOperatorConfig
from .lora import (
    AdapterTrainConfig,
    HFDiscriminator,
    adapted_decode,
    adapter_for,
    discriminator_loss,
    hf_adversarial_loss,
    hf_fidelity_loss,
)
from .restorer import LatentRestorer, RestorerConfig, restoration_loss
from .vae import (
    FeaturePrior,
    ImageVAE,
    VAETrainConfig,
    reparameterize,
    training_loss,
)
from .arrays import to_nchw


@dataclass(frozen=True)
class RestorerTrainConfig:
    steps: int = 800
    batch_size: int = 8
    lr: float = 1e-3
    clip_grad: float = 1.0  # residual stacks without norm layers can spike
    width: int = 64
    blocks: int = 6
    seed: int = 0
    log_every: int = 50


def _abort_on_nan(loss: torch.Tensor, step: int, batch: dict) -> None:
    if torch.isfinite(loss):
        return
    path = Path(tempfile.mkdtemp(prefix="latres-diverged-")) / f"batch_step{step}.npz"
    np.savez(path, **batch)
    raise TrainingDiverged(
        f"non-finite loss at step {step}; offending batch saved to {path}",
        snapshot_path=str(path),
    )


def _sample_pairs(
    ds: RestorationDataset, rng: np.random.Generator, batch_size: int
) -> tuple[np.ndarray, np.ndarray | None, np.ndarray]:
    """Random (clean, paired_degraded, indices) batch; degradation kind is
    drawn per item."""
    idx = rng.integers(0, len(ds), size=batch_size)
    clean = ds.clean[idx]
    if not ds.degraded:
        return clean, None, idx
    kinds = sorted(ds.degraded)
    picks = rng.integers(0, len(kinds), size=batch_size)
    paired = np.stack([ds.degraded[kinds[k]][i] for k, i in zip(picks, idx)])
    return clean, paired, idx


def train_vae(
    cfg: VAETrainConfig, dataset: RestorationDataset
) -> tuple[CheckpointBundle, list[dict]]:
    """First phase: train encoder/decoder/projector on the composite loss."""
    pcfg = cfg.resolved_perturb()
    if pcfg.p2 > 0 and not dataset.degraded:
        raise ConfigurationError(
            "perturbation requires paired degradations (p2 > 0) but the dataset has none"
        )
    torch.manual_seed(derive_seed(cfg.seed, "vae-init"))
    vae = ImageVAE(cfg.arch)
    prior = FeaturePrior(
        seed=cfg.prior_seed,
        feature_dim=cfg.feature_dim,
        in_channels=cfg.arch.in_channels,
        latent_channels=cfg.arch.latent_channels,
        downsample=cfg.arch.downsample,
        widths=cfg.arch.widths,
    )
    params = (
        list(vae.parameters())
        + [p for p in prior.parameters() if p.requires_grad]
    )
    opt = torch.optim.Adam(params, lr=cfg.lr)
    rng = np.random.default_rng(derive_seed(cfg.seed, "vae-batches"))

    resolved = dataclasses.replace(cfg, perturb=pcfg)
    log: list[dict] = []
    for step in range(cfg.steps):
        clean, paired, _ = _sample_pairs(dataset, rng, cfg.batch_size)
        total, parts = training_loss(
            vae, prior, clean, paired, step, resolved, derive_seed(cfg.seed, "vae-step", step)
        )
        _abort_on_nan(total, step, {"clean": clean, "paired": paired if paired is not None else np.zeros(0)})
        opt.zero_grad()
        total.backward()
        opt.step()
        if step % cfg.log_every == 0 or step == cfg.steps - 1:
            entry = {k: parts[k] for k in ("total", "recon_l1", "kl", "invariance", "equivariance")}
            log.append({"step": step, **entry})

    bundle = CheckpointBundle(
        stage="vae",
        config={
            "vae": serialization.to_dict(resolved),
            "dataset": serialization.to_dict(dataset.manifest),
        },
        prior_seed=cfg.prior_seed,
        feature_dim=cfg.feature_dim,
    )
    bundle.add_module("encoder", vae.encoder)
    bundle.add_module("decoder", vae.decoder)
    bundle.add_module("projector", prior.projector)
    return bundle, log


def train_restorer(
    cfg: RestorerTrainConfig, dataset: RestorationDataset, vae_bundle: CheckpointBundle
) -> tuple[CheckpointBundle, list[dict]]:
    """Second phase: train the latent restorer against frozen VAE weights."""
    if not vae_bundle.has_namespace("encoder"):
        raise ConfigurationError("bundle has no trained autoencoder")
    if not dataset.degraded:
        raise ConfigurationError("restorer training needs paired degradations")
    vae = vae_bundle.build_vae()
    for p in vae.parameters():
        p.requires_grad_(False)
    torch.manual_seed(derive_seed(cfg.seed, "restorer-init"))
    restorer = LatentRestorer(
        RestorerConfig(
            latent_channels=vae.cfg.latent_channels, width=cfg.width, blocks=cfg.blocks
        )
    )
    opt = torch.optim.Adam(restorer.parameters(), lr=cfg.lr)
    rng = np.random.default_rng(derive_seed(cfg.seed, "restorer-batches"))
    gen = torch.Generator().manual_seed(derive_seed(cfg.seed, "restorer-noise"))

    log: list[dict] = []
    for step in range(cfg.steps):
        clean, paired, _ = _sample_pairs(dataset, rng, cfg.batch_size)
        clean_t = to_nchw(clean)
        with torch.no_grad():
            z_deg = reparameterize(vae.encode(to_nchw(paired)), generator=gen)
        loss = restoration_loss(restorer, vae, z_deg, clean_t)
        _abort_on_nan(loss, step, {"clean": clean, "paired": paired})
        opt.zero_grad()
        loss.backward()
        if cfg.clip_grad > 0:
            torch.nn.utils.clip_grad_norm_(restorer.parameters(), cfg.clip_grad)
        opt.step()
        if step % cfg.log_every == 0 or step == cfg.steps - 1:
            log.append({"step": step, "restoration_l1": float(loss.detach())})

    bundle = CheckpointBundle(
        stage="restorer",
        config={**vae_bundle.config, "restorer": serialization.to_dict(cfg)},
        blobs={k: v for k, v in vae_bundle.blobs.items() if k.startswith("projector.")},
        prior_seed=vae_bundle.prior_seed,
        feature_dim=vae_bundle.feature_dim,
    )
    # re-export the live modules so the persisted bytes reflect exactly what
    # trained (a mutated "frozen" weight would show up as a hash change)
    bundle.add_module("encoder", vae.encoder)
    bundle.add_module("decoder", vae.decoder)
    bundle.add_module("restorer", restorer)
    return bundle, log


def train_adapters(
    cfg: AdapterTrainConfig, dataset: RestorationDataset, bundle: CheckpointBundle
) -> tuple[CheckpointBundle, list[dict]]:
    """Third phase: alternate the fidelity (encoder) and perception
    (decoder) adapters; base VAE and restorer stay frozen throughout."""
    vae = bundle.build_vae()
    restorer = bundle.build_restorer()
    if restorer is None:
        raise ConfigurationError("adapter training needs a trained restorer in the bundle")
    if not dataset.degraded:
        raise ConfigurationError("adapter training needs paired degradations")
    for p in list(vae.parameters()) + list(restorer.parameters()):
        p.requires_grad_(False)

    torch.manual_seed(derive_seed(cfg.seed, "adapter-init"))
    enc_adapter = adapter_for(
        vae.encoder, rank=cfg.rank, scale=cfg.scale, seed=derive_seed(cfg.seed, "enc")
    )
    dec_adapter = adapter_for(
        vae.decoder, rank=cfg.rank, scale=cfg.scale, seed=derive_seed(cfg.seed, "dec")
    )
    disc = HFDiscriminator(in_channels=vae.cfg.in_channels, width=cfg.disc_width)
    opt_f = torch.optim.Adam(enc_adapter.parameters(), lr=cfg.lr)
    opt_p = torch.optim.Adam(dec_adapter.parameters(), lr=cfg.effective_perception_lr)
    opt_d = torch.optim.Adam(disc.parameters(), lr=cfg.disc_lr)
    rng = np.random.default_rng(derive_seed(cfg.seed, "adapter-batches"))

    log: list[dict] = []
    for step in range(cfg.steps):
        entry = {"step": step}
        for _ in range(cfg.n_fidelity):
            clean, paired, _ = _sample_pairs(dataset, rng, cfg.batch_size)
            loss_f = hf_fidelity_loss(
                vae,
                enc_adapter,
                to_nchw(paired),
                to_nchw(clean),
                cfg.hf,
                restorer=restorer if cfg.fidelity_through_restorer else None,
            )
            _abort_on_nan(loss_f, step, {"clean": clean, "paired": paired})
            opt_f.zero_grad()
            loss_f.backward()
            opt_f.step()
            entry["fidelity"] = float(loss_f.detach())
        for _ in range(cfg.n_perception):
            clean, paired, _ = _sample_pairs(dataset, rng, cfg.batch_size)
            deg_t, clean_t = to_nchw(paired), to_nchw(clean)
            with torch.no_grad():
                fake = adapted_decode(vae, dec_adapter, 1.0, restorer(vae.encode(deg_t).mu))
            loss_d = discriminator_loss(disc, clean_t, fake, cfg.hf)
            _abort_on_nan(loss_d, step, {"clean": clean, "paired": paired})
            opt_d.zero_grad()
            loss_d.backward()
            opt_d.step()
            loss_g = hf_adversarial_loss(vae, dec_adapter, restorer, disc, deg_t, cfg.hf)
            _abort_on_nan(loss_g, step, {"clean": clean, "paired": paired})
            opt_p.zero_grad()
            loss_g.backward()
            opt_p.step()
            entry["disc"] = float(loss_d.detach())
            entry["adversarial"] = float(loss_g.detach())
        if step % cfg.log_every == 0 or step == cfg.steps - 1:
            log.append(entry)

    out = CheckpointBundle(
        stage="adapters",
        config={
            **bundle.config,
            "adapters": {
                **serialization.to_dict(cfg),
                "enc_layers": {k: list(v) for k, v in enc_adapter.layer_shapes.items()},
                "dec_layers": {k: list(v) for k, v in dec_adapter.layer_shapes.items()},
            },
        },
        blobs={k: v for k, v in bundle.blobs.items() if k.startswith("projector.")},
        prior_seed=bundle.prior_seed,
        feature_dim=bundle.feature_dim,
    )
    # live modules, not input copies: a disturbed base would change hashes
    out.add_module("encoder", vae.encoder)
    out.add_module("decoder", vae.decoder)
    out.add_module("restorer", restorer)
    out.add_module("adapter_enc", enc_adapter)
    out.add_module("adapter_dec", dec_adapter)
    out.add_module("disc", disc)
    return out, log
