"""scikit-learn style facade over the three-phase training pipeline.

``LatentRestorationEstimator.fit`` takes a batch of clean images, builds
paired degradations, and runs all phases with desk-scale defaults;
``transform`` restores degraded images at the configured alpha. The class
follows the estimator protocol (``get_params``/``set_params``, clonable,
stateless until fit), so it drops into sklearn pipelines and searches.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .dataset import DatasetManifest, RestorationDataset
from .degrade import PAIR_SEVERITY, DegradationSpec, apply_degradation, derive_seed
from .errors import ValidationError
from .imageio import snap_to_grid
from .lora import AdapterTrainConfig
from .metrics import psnr
from .training import RestorerTrainConfig, train_adapters, train_restorer, train_vae
from .vae import VAETrainConfig


def check_image_batch(X, name: str = "X") -> np.ndarray:
    """Validate a batch of images: float NxHxWx3 in [0, 1]."""
    X = np.asarray(X, dtype=np.float32)
    if X.ndim == 3:
        X = X[None]
    if X.ndim != 4 or X.shape[3] != 3:
        raise ValidationError(f"{name} must have shape (N, H, W, 3), got {X.shape}")
    if X.shape[1] % 2 or X.shape[2] % 2:
        raise ValidationError(f"{name} spatial dims must be even, got {X.shape[1:3]}")
    if float(X.min()) < 0.0 or float(X.max()) > 1.0:
        raise ValidationError(f"{name} values must lie in [0, 1]")
    return X


class LatentRestorationEstimator(BaseEstimator, TransformerMixin):
    """All-in-one restorer with a fidelity/perception dial.

    Parameters mirror the CLI defaults but scaled down so a fit completes
    in minutes on a CPU. ``alpha`` weights the fidelity adapter; ``1 -
    alpha`` weights the texture adapter.
    """

    def __init__(
        self,
        alpha: float = 0.5,
        degradations: tuple[str, ...] = ("gaussian_noise", "gaussian_blur", "low_light"),
        vae_steps: int = 300,
        restorer_steps: int = 300,
        adapter_steps: int = 100,
        batch_size: int = 8,
        seed: int = 0,
    ):
        self.alpha = alpha
        self.degradations = degradations
        self.vae_steps = vae_steps
        self.restorer_steps = restorer_steps
        self.adapter_steps = adapter_steps
        self.batch_size = batch_size
        self.seed = seed

    def _dataset_from_images(self, X: np.ndarray) -> RestorationDataset:
        manifest = DatasetManifest(
            source="procedural",
            count=X.shape[0],
            resolution=X.shape[1],
            degradations=tuple(self.degradations),
            seed=self.seed,
        )
        clean = np.stack([snap_to_grid(img) for img in X])
        degraded = {}
        for kind in self.degradations:
            spec = DegradationSpec(kind, PAIR_SEVERITY)
            degraded[kind] = np.stack(
                [
                    snap_to_grid(apply_degradation(clean[i], spec, derive_seed(self.seed, i, kind)))
                    for i in range(clean.shape[0])
                ]
            )
        return RestorationDataset(manifest=manifest, clean=clean, degraded=degraded)

    def fit(self, X, y=None):
        if isinstance(X, RestorationDataset):
            ds = X
        else:
            ds = self._dataset_from_images(check_image_batch(X))
        vae_bundle, _ = train_vae(
            VAETrainConfig(steps=self.vae_steps, batch_size=self.batch_size, seed=self.seed),
            ds,
        )
        restorer_bundle, _ = train_restorer(
            RestorerTrainConfig(
                steps=self.restorer_steps, batch_size=self.batch_size, seed=self.seed
            ),
            ds,
            vae_bundle,
        )
        self.bundle_, _ = train_adapters(
            AdapterTrainConfig(
                steps=self.adapter_steps, batch_size=self.batch_size, seed=self.seed
            ),
            ds,
            restorer_bundle,
        )
        return self

    def _session(self):
        from .pipeline import InferenceSession

        if not hasattr(self, "bundle_"):
            raise NotFittedError("call fit before transform")
        if not hasattr(self, "_session_cache") or self._session_cache[0] is not self.bundle_:
            self._session_cache = (self.bundle_, InferenceSession(self.bundle_))
        return self._session_cache[1]

    def transform(self, X) -> np.ndarray:
        X = check_image_batch(X)
        session = self._session()
        return np.stack([session.restore(img, self.alpha) for img in X])

    def score(self, X, y) -> float:
        """Mean PSNR of restored X against reference images y."""
        y = check_image_batch(y, "y")
        out = self.transform(X)
        return float(np.mean([psnr(out[i], y[i]) for i in range(out.shape[0])]))
