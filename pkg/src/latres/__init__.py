"""Latent-space all-in-one image restoration with a fidelity/perception dial.

The pipeline has three trained parts: a regularized image autoencoder
whose latent space stays stable across degradations, a compact latent
restorer, and a pair of low-rank high-frequency adapters (encoder:
fidelity, decoder: texture) blended at inference by ``alpha``. The
:mod:`latres.freq` toolkit provides the spectral diagnostics used to
measure latent robustness.
"""

from .checkpoint import CheckpointBundle
from .dataset import DatasetManifest, RestorationDataset, build_dataset, load_dataset, save_dataset
from .degrade import DegradationSpec, PerturbConfig, Schedule, apply_degradation, perturb, schedule_value
from .errors import (
    CheckpointError,
    ConfigurationError,
    IngestionError,
    LatresError,
    TrainingDiverged,
    ValidationError,
)
from .estimator import LatentRestorationEstimator
from .freq import (
    CDCSReport,
    HFOperatorConfig,
    SpectralBands,
    cdcs,
    dct2,
    hf_energy_proportion,
    high_pass,
    idct2,
    lf_energy_proportion,
    low_pass,
)
from .lora import AdapterTrainConfig, HFDiscriminator, LowRankAdapter, effective_weights, init_adapter
from .metrics import MetricsReport, compute_metrics, lpips_proxy, psnr, ssim
from .pipeline import InferenceSession, infer, parameter_report, sweep_alpha, tile_infer
from .restorer import LatentRestorer, RestorerConfig, restoration_loss, restore_latent
from .training import RestorerTrainConfig, train_adapters, train_restorer, train_vae
from .vae import (
    FeaturePrior,
    GaussianPosterior,
    ImageVAE,
    VAEConfig,
    VAETrainConfig,
    equivariance_loss,
    invariance_loss,
    kl_loss,
    recon_l1,
    reparameterize,
    semantic_features,
)

__version__ = "0.1.0"
