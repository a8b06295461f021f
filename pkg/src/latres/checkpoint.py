"""Single-file checkpoint container.

Layout (little-endian):

    bytes 0..3    magic ``LHCP``
    bytes 4..7    uint32 format version (1)
    bytes 8..15   uint64 length of the metadata JSON
    then          metadata JSON (UTF-8, canonical: sorted keys, no spaces)
    then          blob payloads, concatenated in metadata order

Metadata holds the stage tag, the full config snapshot and its sha256, the
feature-prior seed, and per-blob name/shape/sha256. Blobs are float32
row-major. Saving is canonical, so load -> save reproduces a file byte for
byte, and every blob is hash-verified on load.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from .errors import CheckpointError
from .serialization import from_dict
from .vae import FeaturePrior, ImageVAE, VAEConfig

MAGIC = b"LHCP"
VERSION = 1


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def state_blobs(prefix: str, module: torch.nn.Module) -> dict[str, np.ndarray]:
    """Flatten a module state dict into namespaced float32 blobs."""
    out = {}
    for name, tensor in module.state_dict().items():
        out[f"{prefix}.{name}"] = (
            tensor.detach().cpu().numpy().astype(np.float32, copy=True)
        )
    return out


@dataclass
class CheckpointBundle:
    """Everything needed to run or continue training a model."""

    stage: str
    config: dict = field(default_factory=dict)
    blobs: dict[str, np.ndarray] = field(default_factory=dict)
    prior_seed: int = 0
    feature_dim: int = 256

    # -- persistence ---------------------------------------------------

    def blob_hashes(self) -> dict[str, str]:
        return {
            name: _sha256(np.ascontiguousarray(arr, dtype=np.float32).tobytes())
            for name, arr in self.blobs.items()
        }

    def config_hash(self) -> str:
        return _sha256(_canonical(self.config).encode())

    def model_id(self) -> str:
        digest = hashlib.sha256()
        digest.update(self.config_hash().encode())
        for name in sorted(self.blobs):
            digest.update(name.encode())
            digest.update(self.blob_hashes()[name].encode())
        return digest.hexdigest()[:12]

    def save(self, path) -> None:
        names = sorted(self.blobs)
        payloads = [
            np.ascontiguousarray(self.blobs[n], dtype=np.float32).tobytes() for n in names
        ]
        meta = {
            "stage": self.stage,
            "config": self.config,
            "config_sha256": self.config_hash(),
            "prior_seed": self.prior_seed,
            "feature_dim": self.feature_dim,
            "blobs": [
                {
                    "name": n,
                    "shape": list(self.blobs[n].shape),
                    "dtype": "f32",
                    "sha256": _sha256(p),
                }
                for n, p in zip(names, payloads)
            ],
        }
        meta_bytes = _canonical(meta).encode()
        with open(path, "wb") as f:
            f.write(MAGIC)
            f.write(struct.pack("<IQ", VERSION, len(meta_bytes)))
            f.write(meta_bytes)
            for p in payloads:
                f.write(p)

    @classmethod
    def load(cls, path) -> "CheckpointBundle":
        path = Path(path)
        if not path.exists():
            raise CheckpointError(f"checkpoint not found: {path}")
        raw = path.read_bytes()
        if raw[:4] != MAGIC:
            raise CheckpointError(f"not a checkpoint file: {path}")
        version, meta_len = struct.unpack("<IQ", raw[4:16])
        if version != VERSION:
            raise CheckpointError(f"unsupported checkpoint version {version}")
        meta = json.loads(raw[16 : 16 + meta_len].decode())
        if meta.get("config_sha256") != _sha256(_canonical(meta["config"]).encode()):
            raise CheckpointError(f"config hash mismatch in {path}")
        blobs = {}
        offset = 16 + meta_len
        for entry in meta["blobs"]:
            shape = tuple(entry["shape"])
            nbytes = int(np.prod(shape, dtype=np.int64)) * 4 if shape else 4
            chunk = raw[offset : offset + nbytes]
            if len(chunk) != nbytes:
                raise CheckpointError(f"truncated blob {entry['name']} in {path}")
            if _sha256(chunk) != entry["sha256"]:
                raise CheckpointError(f"blob hash mismatch for {entry['name']} in {path}")
            blobs[entry["name"]] = np.frombuffer(chunk, dtype="<f4").reshape(shape).copy()
            offset += nbytes
        return cls(
            stage=meta["stage"],
            config=meta["config"],
            blobs=blobs,
            prior_seed=meta["prior_seed"],
            feature_dim=meta["feature_dim"],
        )

    # -- namespaces ----------------------------------------------------

    def namespace(self, prefix: str) -> dict[str, torch.Tensor]:
        plen = len(prefix) + 1
        return {
            name[plen:]: torch.from_numpy(arr.copy())
            for name, arr in self.blobs.items()
            if name.startswith(prefix + ".")
        }

    def has_namespace(self, prefix: str) -> bool:
        return any(name.startswith(prefix + ".") for name in self.blobs)

    def add_module(self, prefix: str, module: torch.nn.Module) -> None:
        self.blobs.update(state_blobs(prefix, module))

    # -- builders --------------------------------------------------------

    def vae_config(self) -> VAEConfig:
        arch = self.config.get("vae", {}).get("arch")
        return from_dict(VAEConfig, arch) if arch else VAEConfig()

    def build_vae(self) -> ImageVAE:
        vae = ImageVAE(self.vae_config())
        vae.encoder.load_state_dict(self.namespace("encoder"))
        vae.decoder.load_state_dict(self.namespace("decoder"))
        vae.eval()
        return vae

    def build_prior(self) -> FeaturePrior:
        arch = self.vae_config()
        prior = FeaturePrior(
            seed=self.prior_seed,
            feature_dim=self.feature_dim,
            in_channels=arch.in_channels,
            latent_channels=arch.latent_channels,
            downsample=arch.downsample,
            widths=arch.widths,
        )
        if self.has_namespace("projector"):
            prior.projector.load_state_dict(self.namespace("projector"))
        prior.eval()
        return prior

    def build_restorer(self):
        from .restorer import LatentRestorer, RestorerConfig

        if not self.has_namespace("restorer"):
            return None
        rcfg = self.config.get("restorer", {})
        cfg = RestorerConfig(
            latent_channels=self.vae_config().latent_channels,
            width=rcfg.get("width", 64),
            blocks=rcfg.get("blocks", 6),
        )
        restorer = LatentRestorer(cfg)
        restorer.load_state_dict(self.namespace("restorer"))
        restorer.eval()
        return restorer

    def build_adapter(self, which: str):
        """Rebuild the encoder ("enc") or decoder ("dec") adapter, or None."""
        from .lora import LowRankAdapter

        prefix = f"adapter_{which}"
        if not self.has_namespace(prefix):
            return None
        acfg = self.config.get("adapters", {})
        shapes = {k: tuple(v) for k, v in acfg[f"{which}_layers"].items()}
        adapter = LowRankAdapter(
            shapes, rank=acfg.get("rank", 4), scale=acfg.get("scale", 1.0), cap_rank=True
        )
        adapter.load_state_dict(self.namespace(prefix))
        adapter.eval()
        return adapter

    def build_discriminator(self):
        from .lora import HFDiscriminator

        if not self.has_namespace("disc"):
            return None
        disc = HFDiscriminator(
            in_channels=self.vae_config().in_channels,
            width=self.config.get("adapters", {}).get("disc_width", 32),
        )
        disc.load_state_dict(self.namespace("disc"))
        disc.eval()
        return disc

    @property
    def has_adapters(self) -> bool:
        return self.has_namespace("adapter_enc") or self.has_namespace("adapter_dec")


def export_adapters(bundle: CheckpointBundle, path) -> None:
    """Write just the adapters (plus their config) as a standalone file."""
    if not bundle.has_adapters:
        raise CheckpointError("bundle has no adapters to export")
    adapters_only = CheckpointBundle(
        stage="adapters-only",
        config={"adapters": bundle.config["adapters"]},
        blobs={
            k: v
            for k, v in bundle.blobs.items()
            if k.startswith(("adapter_enc.", "adapter_dec."))
        },
        prior_seed=bundle.prior_seed,
        feature_dim=bundle.feature_dim,
    )
    adapters_only.save(path)


def merge_adapters(base: CheckpointBundle, adapter_path) -> CheckpointBundle:
    """Combine a base checkpoint with a standalone adapter file; the result
    runs inference exactly like the bundle the adapters came from."""
    adapters = CheckpointBundle.load(adapter_path)
    if adapters.stage != "adapters-only":
        raise CheckpointError(f"{adapter_path} is not an adapter export")
    merged = CheckpointBundle(
        stage="adapters",
        config={**base.config, "adapters": adapters.config["adapters"]},
        blobs={**base.blobs, **adapters.blobs},
        prior_seed=base.prior_seed,
        feature_dim=base.feature_dim,
    )
    return merged
