"""High-frequency extraction and spectral diagnostics.

The high-pass operator is shared by the adapter losses (so it must be
differentiable on torch tensors) and by the offline analyses (numpy).
Spectral tools use the orthonormal type-II 2-D DCT; radial frequency of
coefficient (u, v) on a UxV grid is

    rho(u, v) = sqrt((u/(U-1))^2 + (v/(V-1))^2) / sqrt(2)

so rho ranges over [0, 1] with DC at 0.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.fft
import torch
import torch.nn.functional as F

from .errors import ValidationError


@dataclass(frozen=True)
class HFOperatorConfig:
    method: str = "gaussian_residual"  # or "dct_mask"
    sigma: float = 2.0
    cutoff: float = 0.5

    def __post_init__(self):
        if self.method not in ("gaussian_residual", "dct_mask"):
            raise ValidationError(f"unknown high-pass method: {self.method!r}")
        if self.method == "gaussian_residual" and self.sigma <= 0:
            raise ValidationError(f"sigma must be > 0, got {self.sigma}")
        if self.method == "dct_mask" and not 0.0 < self.cutoff < 1.0:
            raise ValidationError(f"cutoff must be in (0, 1), got {self.cutoff}")


@dataclass(frozen=True)
class SpectralBands:
    cutoff: float = 0.5
    dc_excluded: bool = True

    def __post_init__(self):
        if not 0.0 < self.cutoff < 1.0:
            raise ValidationError(f"cutoff must be in (0, 1), got {self.cutoff}")


@dataclass
class CDCSReport:
    """Cross-degradation cosine similarity of latent (or pixel) sets."""

    overall: float
    per_band: dict = field(default_factory=dict)
    num_contents: int = 0
    num_degradations: int = 0

    def to_dict(self) -> dict:
        return {
            "overall": self.overall,
            "per_band": dict(self.per_band),
            "num_contents": self.num_contents,
            "num_degradations": self.num_degradations,
        }


def gaussian_kernel1d(sigma: float) -> np.ndarray:
    """Normalized 1-D Gaussian with radius ceil(3*sigma)."""
    radius = max(int(np.ceil(3.0 * sigma)), 1)
    xs = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-0.5 * (xs / sigma) ** 2)
    return k / k.sum()


def _gaussian_blur_torch(x: torch.Tensor, sigma: float) -> torch.Tensor:
    k = torch.as_tensor(gaussian_kernel1d(sigma), dtype=x.dtype, device=x.device)
    radius = (k.numel() - 1) // 2
    c = x.shape[1]
    if min(x.shape[-2], x.shape[-1]) <= radius:
        raise ValidationError(
            f"spatial dims {tuple(x.shape[-2:])} too small for kernel radius {radius}"
        )
    kh = k.view(1, 1, -1, 1).expand(c, 1, -1, 1)
    kw = k.view(1, 1, 1, -1).expand(c, 1, 1, -1)
    x = F.pad(x, (0, 0, radius, radius), mode="reflect")
    x = F.conv2d(x, kh, groups=c)
    x = F.pad(x, (radius, radius, 0, 0), mode="reflect")
    return F.conv2d(x, kw, groups=c)


def dct_matrix(n: int) -> np.ndarray:
    """Orthonormal DCT-II matrix M such that coeffs = M @ signal."""
    return scipy.fft.dct(np.eye(n), type=2, norm="ortho", axis=0)


def _dct_mask_torch(x: torch.Tensor, cutoff: float) -> torch.Tensor:
    h, w = x.shape[-2], x.shape[-1]
    ch = torch.as_tensor(dct_matrix(h), dtype=x.dtype, device=x.device)
    cw = torch.as_tensor(dct_matrix(w), dtype=x.dtype, device=x.device)
    coeff = torch.einsum("ij,bcjk,lk->bcil", ch, x, cw)
    keep = torch.as_tensor(
        radial_frequency(h, w) >= cutoff, dtype=torch.bool, device=x.device
    )
    coeff = coeff * keep
    return torch.einsum("ji,bcjk,kl->bcil", ch, coeff, cw)


def high_pass(x, cfg: HFOperatorConfig = HFOperatorConfig()):
    """High-frequency component of an image or latent, same shape as input.

    Accepts torch tensors (CHW or NCHW, differentiable) or numpy arrays
    (HW or HWC). For the gaussian_residual method the low- and high-pass
    parts sum exactly back to the input.
    """
    if isinstance(x, np.ndarray):
        arr = np.asarray(x, dtype=np.float32)
        chw = arr[None, None] if arr.ndim == 2 else arr.transpose(2, 0, 1)[None]
        out = high_pass(torch.from_numpy(np.ascontiguousarray(chw)), cfg).numpy()
        return out[0, 0] if arr.ndim == 2 else out[0].transpose(1, 2, 0)
    squeeze = x.dim() == 3
    if squeeze:
        x = x.unsqueeze(0)
    if x.dim() != 4:
        raise ValidationError(f"expected CHW or NCHW tensor, got shape {tuple(x.shape)}")
    if cfg.method == "gaussian_residual":
        out = x - _gaussian_blur_torch(x, cfg.sigma)
    else:
        out = _dct_mask_torch(x, cfg.cutoff)
    return out.squeeze(0) if squeeze else out


def low_pass(x, cfg: HFOperatorConfig = HFOperatorConfig()):
    """Complement of :func:`high_pass`; low + high sums back to the input
    (bitwise at float64, to 1 ulp at float32)."""
    if isinstance(x, np.ndarray):
        return np.asarray(x, dtype=np.float32) - high_pass(x, cfg)
    return x - high_pass(x, cfg)


def dct2(x: np.ndarray) -> np.ndarray:
    """Orthonormal type-II 2-D DCT of a real 2-D array."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.size == 0:
        raise ValidationError(f"expected non-empty 2-D array, got shape {x.shape}")
    return scipy.fft.dctn(x, type=2, norm="ortho")


def idct2(c: np.ndarray) -> np.ndarray:
    c = np.asarray(c, dtype=np.float64)
    if c.ndim != 2 or c.size == 0:
        raise ValidationError(f"expected non-empty 2-D array, got shape {c.shape}")
    return scipy.fft.idctn(c, type=2, norm="ortho")


def radial_frequency(u: int, v: int) -> np.ndarray:
    """Normalized radial frequency of each (u, v) DCT coefficient."""
    uu = np.arange(u, dtype=np.float64) / max(u - 1, 1)
    vv = np.arange(v, dtype=np.float64) / max(v - 1, 1)
    return np.sqrt(uu[:, None] ** 2 + vv[None, :] ** 2) / np.sqrt(2.0)


def _channel_slices(x) -> np.ndarray:
    if isinstance(x, torch.Tensor):
        x = x.detach().cpu().numpy()
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 2:
        return x[None]
    if x.ndim == 3:
        return x.transpose(2, 0, 1)  # HWC -> CHW
    raise ValidationError(f"expected HW or HWC array, got shape {x.shape}")


def hf_energy_proportion(x, bands: SpectralBands = SpectralBands()) -> float:
    """Share of (non-DC) DCT energy at radial frequency >= the cutoff."""
    channels = _channel_slices(x)
    rho = radial_frequency(channels.shape[1], channels.shape[2])
    dc = np.zeros_like(rho, dtype=bool)
    dc[0, 0] = True
    hf = rho >= bands.cutoff
    props = []
    for ch in channels:
        e = dct2(ch) ** 2
        if bands.dc_excluded:
            den = e[~dc].sum()
            num = e[hf & ~dc].sum()
        else:
            den = e.sum()
            num = e[hf].sum()
        props.append(0.0 if den <= 0 else float(num / den))
    return float(np.mean(props))


def lf_energy_proportion(x, bands: SpectralBands = SpectralBands()) -> float:
    channels = _channel_slices(x)
    rho = radial_frequency(channels.shape[1], channels.shape[2])
    dc = np.zeros_like(rho, dtype=bool)
    dc[0, 0] = True
    lf = rho < bands.cutoff
    props = []
    for ch in channels:
        e = dct2(ch) ** 2
        if bands.dc_excluded:
            den = e[~dc].sum()
            num = e[lf & ~dc].sum()
        else:
            den = e.sum()
            num = e[lf].sum()
        props.append(0.0 if den <= 0 else float(num / den))
    return float(np.mean(props))


def _band_vector(arr: np.ndarray, mask: np.ndarray) -> np.ndarray:
    coeffs = [dct2(ch)[mask] for ch in _channel_slices(arr)]
    return np.concatenate(coeffs)


def _mean_pair_cosine(vectors: list[np.ndarray]) -> float | None:
    sims = []
    for a in range(len(vectors)):
        for b in range(a + 1, len(vectors)):
            na, nb = np.linalg.norm(vectors[a]), np.linalg.norm(vectors[b])
            if na == 0 or nb == 0:
                warnings.warn("zero-norm vector in similarity computation; pair skipped")
                continue
            sims.append(float(np.dot(vectors[a], vectors[b]) / (na * nb)))
    return None if not sims else float(np.mean(sims))


def cdcs(latents: dict, bands: SpectralBands | None = None) -> CDCSReport:
    """Cross-degradation cosine similarity.

    ``latents`` maps a degradation id to a list of arrays; index i across
    all lists must hold the same content. For each content, the cosine
    similarity of every unordered pair of degradations is averaged; the
    report averages those over contents. When ``bands`` is given the same
    statistic is also computed on band-restricted DCT coefficients.
    """
    if len(latents) < 2:
        raise ValidationError("need at least two degradation ids")
    ids = sorted(latents)
    lengths = {len(latents[d]) for d in ids}
    if len(lengths) != 1:
        raise ValidationError(f"latent lists differ in length: {sorted(lengths)}")
    (n,) = lengths
    if n == 0:
        raise ValidationError("latent lists are empty")
    shape = np.asarray(latents[ids[0]][0]).shape
    for d in ids:
        for arr in latents[d]:
            if np.asarray(arr).shape != shape:
                raise ValidationError(
                    f"shape mismatch in {d!r}: {np.asarray(arr).shape} vs {shape}"
                )

    overall = []
    for i in range(n):
        vecs = [np.asarray(latents[d][i], dtype=np.float64).ravel() for d in ids]
        sim = _mean_pair_cosine(vecs)
        if sim is not None:
            overall.append(sim)

    per_band: dict[str, float] = {}
    if bands is not None:
        channels = _channel_slices(np.asarray(latents[ids[0]][0]))
        rho = radial_frequency(channels.shape[1], channels.shape[2])
        dc = np.zeros_like(rho, dtype=bool)
        dc[0, 0] = True
        masks = {
            "low": (rho < bands.cutoff) & (~dc if bands.dc_excluded else True),
            "high": (rho >= bands.cutoff) & ~dc,
        }
        for name, mask in masks.items():
            vals = []
            for i in range(n):
                vecs = [_band_vector(np.asarray(latents[d][i]), mask) for d in ids]
                sim = _mean_pair_cosine(vecs)
                if sim is not None:
                    vals.append(sim)
            per_band[name] = float(np.mean(vals)) if vals else float("nan")

    return CDCSReport(
        overall=float(np.mean(overall)) if overall else float("nan"),
        per_band=per_band,
        num_contents=n,
        num_degradations=len(ids),
    )
