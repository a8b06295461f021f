"""Image quality metrics: PSNR, SSIM, and a perceptual feature distance.

True learned perceptual metrics need a specific pretrained network; here
the perceptual distance is computed from the package's frozen feature
extractor and is named ``lpips_proxy`` everywhere to avoid claiming
equivalence with the learned metric.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import correlate2d

from .arrays import to_nchw
from .errors import ValidationError
from .freq import SpectralBands, hf_energy_proportion
from .vae import FeaturePrior

_SSIM_WIN = 11
_SSIM_SIGMA = 1.5
_C1 = 0.01**2
_C2 = 0.03**2


@dataclass
class MetricsReport:
    psnr: float
    ssim: float
    lpips_proxy: float
    hf_energy_gap: float

    def to_dict(self) -> dict:
        return {
            "psnr": self.psnr,
            "ssim": self.ssim,
            "lpips_proxy": self.lpips_proxy,
            "hf_energy_gap": self.hf_energy_gap,
        }


def psnr(a: np.ndarray, b: np.ndarray) -> float:
    """10*log10(1/MSE) for images in [0, 1]; +inf for identical inputs."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValidationError(f"shape mismatch: {a.shape} vs {b.shape}")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return float("inf")
    return float(10.0 * np.log10(1.0 / mse))


def _gaussian_window() -> np.ndarray:
    half = (_SSIM_WIN - 1) // 2
    xs = np.arange(-half, half + 1, dtype=np.float64)
    k = np.exp(-0.5 * (xs / _SSIM_SIGMA) ** 2)
    win = np.outer(k, k)
    return win / win.sum()


def _gray(img: np.ndarray) -> np.ndarray:
    img = np.asarray(img, dtype=np.float64)
    return img.mean(axis=2) if img.ndim == 3 else img


def ssim(a: np.ndarray, b: np.ndarray) -> float:
    """Mean local SSIM on the channel-mean grayscale images."""
    x, y = _gray(a), _gray(b)
    if x.shape != y.shape:
        raise ValidationError(f"shape mismatch: {x.shape} vs {y.shape}")
    if min(x.shape) < _SSIM_WIN:
        raise ValidationError(
            f"image {x.shape} smaller than the {_SSIM_WIN}x{_SSIM_WIN} window"
        )
    win = _gaussian_window()
    mu_x = correlate2d(x, win, mode="valid")
    mu_y = correlate2d(y, win, mode="valid")
    var_x = correlate2d(x * x, win, mode="valid") - mu_x**2
    var_y = correlate2d(y * y, win, mode="valid") - mu_y**2
    cov = correlate2d(x * y, win, mode="valid") - mu_x * mu_y
    num = (2 * mu_x * mu_y + _C1) * (2 * cov + _C2)
    den = (mu_x**2 + mu_y**2 + _C1) * (var_x + var_y + _C2)
    return float(np.mean(num / den))


def lpips_proxy(a: np.ndarray, b: np.ndarray, prior: FeaturePrior) -> float:
    """Mean squared distance between unit-normalized frozen-extractor
    features, averaged over all extractor depths (shallow layers carry
    texture, deep layers semantics)."""
    pyr_a = prior.feature_pyramid(to_nchw(a))
    pyr_b = prior.feature_pyramid(to_nchw(b))
    dists = []
    for fa, fb in zip(pyr_a, pyr_b):
        if fa.shape != fb.shape:
            raise ValidationError(f"feature shape mismatch: {fa.shape} vs {fb.shape}")
        na = fa / fa.norm(dim=1, keepdim=True).clamp_min(1e-12)
        nb = fb / fb.norm(dim=1, keepdim=True).clamp_min(1e-12)
        dists.append(((na - nb) ** 2).mean())
    return float(sum(dists) / len(dists))


def compute_metrics(
    output: np.ndarray,
    reference: np.ndarray,
    prior: FeaturePrior,
    bands: SpectralBands = SpectralBands(),
) -> MetricsReport:
    return MetricsReport(
        psnr=psnr(output, reference),
        ssim=ssim(output, reference),
        lpips_proxy=lpips_proxy(output, reference, prior),
        hf_energy_gap=hf_energy_proportion(output, bands)
        - hf_energy_proportion(reference, bands),
    )
