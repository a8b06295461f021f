"""The declarative run configuration document.

One JSON file drives every phase: dataset construction, the three training
phases, and inference options. Unknown keys are rejected, and a parsed
document serializes back to the exact same structure.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

from . import serialization
from .dataset import DatasetManifest
from .errors import ConfigurationError
from .lora import AdapterTrainConfig
from .training import RestorerTrainConfig
from .vae import VAETrainConfig


@dataclass(frozen=True)
class PipelineOptions:
    alpha: float = 0.5
    tile: int = 256
    overlap: int = 32


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    output_dir: str = "runs/out"
    dataset: DatasetManifest = field(default_factory=DatasetManifest)
    vae: VAETrainConfig = field(default_factory=VAETrainConfig)
    restorer: RestorerTrainConfig = field(default_factory=RestorerTrainConfig)
    adapters: AdapterTrainConfig = field(default_factory=AdapterTrainConfig)
    pipeline: PipelineOptions = field(default_factory=PipelineOptions)

    def with_seed(self, seed: int) -> "RunConfig":
        """Propagate one seed into every section that owns randomness."""
        return replace(
            self,
            seed=seed,
            dataset=replace(self.dataset, seed=seed),
            vae=replace(self.vae, seed=seed),
            restorer=replace(self.restorer, seed=seed),
            adapters=replace(self.adapters, seed=seed),
        )


def load_run_config(path) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"config file not found: {path}")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config {path} is not valid JSON: {exc}") from exc
    return serialization.from_dict(RunConfig, data, where="RunConfig")


def dump_run_config(cfg: RunConfig, path) -> None:
    Path(path).write_text(serialization.pretty_json(cfg))
