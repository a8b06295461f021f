"""Synthetic degradations and the progressive training-time perturbation.

Every operator maps a float32 HxWxC image in [0, 1] to the same shape and
range, is the identity at severity 0, and distorts monotonically more (in
expected pixel MSE) as severity grows. All randomness is owned by an
explicit integer seed so results are reproducible and thread-safe.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import convolve1d

from .errors import ConfigurationError, ValidationError

KINDS = ("gaussian_noise", "gaussian_blur", "low_light", "haze", "block_artifact")

# Severity used when building the fixed paired degradations of a dataset.
PAIR_SEVERITY = 0.8

_AIRLIGHT = 0.9
_BLOCK = 8


@dataclass(frozen=True)
class DegradationSpec:
    kind: str
    severity: float


@dataclass(frozen=True)
class Schedule:
    """Monotone ramp from v_min at t=0 to v_max at t>=t_max."""

    kind: str = "linear"
    t_max: int = 1000
    v_min: float = 0.0
    v_max: float = 1.0

    def __post_init__(self):
        if self.kind not in ("linear", "cosine-ramp"):
            raise ConfigurationError(f"unknown schedule kind: {self.kind!r}")
        if self.t_max < 1:
            raise ValidationError(f"t_max must be >= 1, got {self.t_max}")
        if self.v_max < self.v_min:
            raise ValidationError("v_max must be >= v_min")


@dataclass(frozen=True)
class PerturbConfig:
    """Branch probabilities and ramps for the training-time perturbation.

    Branches: keep the clean image (p0), apply a synthetic degradation whose
    severity ramps with the step (p1), or blend toward a paired degraded
    image with a ramping coefficient (p2). ``compose`` switches branch 1
    from a single sampled degradation to a random subset applied in order.
    """

    p0: float = 0.2
    p1: float = 0.4
    p2: float = 0.4
    sev_schedule: Schedule = field(default_factory=Schedule)
    beta_schedule: Schedule = field(default_factory=Schedule)
    compose: bool = False

    def __post_init__(self):
        probs = (self.p0, self.p1, self.p2)
        if any(p < 0 for p in probs):
            raise ValidationError(f"probabilities must be >= 0, got {probs}")
        if abs(sum(probs) - 1.0) > 1e-9:
            raise ValidationError(f"p0+p1+p2 must equal 1, got {sum(probs)!r}")


def derive_seed(*parts) -> int:
    """Stable 63-bit seed derived from a tuple of ints/strings."""
    ints = []
    for p in parts:
        if isinstance(p, str):
            ints.extend(p.encode("utf-8"))
        else:
            ints.append(int(p) & 0xFFFFFFFF)
    return int(np.random.SeedSequence(ints).generate_state(1, np.uint64)[0] >> 1)


def schedule_value(s: Schedule, t: int) -> float:
    """Evaluate a schedule at integer step t (clamps at t_max)."""
    if t < 0:
        raise ValidationError(f"t must be >= 0, got {t}")
    frac = min(t, s.t_max) / s.t_max
    if s.kind == "cosine-ramp":
        frac = 0.5 * (1.0 - np.cos(np.pi * frac))
    return float(s.v_min + (s.v_max - s.v_min) * frac)


def _blur(img: np.ndarray, sigma: float) -> np.ndarray:
    if sigma < 1e-3:  # kernel would be a delta
        return img
    radius = int(np.ceil(3.0 * sigma))
    xs = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-0.5 * (xs / sigma) ** 2)
    k /= k.sum()
    out = convolve1d(img.astype(np.float64), k, axis=0, mode="reflect")
    out = convolve1d(out, k, axis=1, mode="reflect")
    return out.astype(np.float32)


def _block_means(img: np.ndarray, replace: np.ndarray) -> np.ndarray:
    out = img.copy()
    h, w = img.shape[:2]
    for by in range(replace.shape[0]):
        for bx in range(replace.shape[1]):
            if not replace[by, bx]:
                continue
            ys, xs = by * _BLOCK, bx * _BLOCK
            block = out[ys : min(ys + _BLOCK, h), xs : min(xs + _BLOCK, w)]
            block[:] = block.mean(axis=(0, 1), keepdims=True)
    return out


def apply_degradation(image: np.ndarray, spec: DegradationSpec, seed: int) -> np.ndarray:
    """Apply one synthetic degradation; identity when severity is 0."""
    if spec.kind not in KINDS:
        raise ConfigurationError(f"unknown degradation kind: {spec.kind!r}")
    sev = float(spec.severity)
    if not 0.0 <= sev <= 1.0:
        raise ValidationError(f"severity must be in [0, 1], got {sev}")
    image = np.asarray(image, dtype=np.float32)
    if sev == 0.0:
        return image.copy()

    rng = np.random.default_rng(seed)
    if spec.kind == "gaussian_noise":
        out = image + rng.normal(0.0, 0.2 * sev, size=image.shape)
    elif spec.kind == "gaussian_blur":
        out = _blur(image, 5.0 * sev)
    elif spec.kind == "low_light":
        out = np.power(np.clip(image * (1.0 - 0.8 * sev), 0.0, 1.0), 1.0 + sev)
    elif spec.kind == "haze":
        a = 0.7 * sev
        out = (1.0 - a) * image + a * _AIRLIGHT
    else:  # block_artifact
        h, w = image.shape[:2]
        nby = (h + _BLOCK - 1) // _BLOCK
        nbx = (w + _BLOCK - 1) // _BLOCK
        replace = rng.random((nby, nbx)) < sev / 2.0
        out = _block_means(image, replace)
    return np.clip(out, 0.0, 1.0).astype(np.float32)


def perturb(
    clean: np.ndarray,
    paired_deg: np.ndarray | None,
    t: int,
    cfg: PerturbConfig,
    seed: int,
) -> tuple[np.ndarray, int]:
    """Draw one perturbation branch at step t; returns (image, branch_tag)."""
    if cfg.p2 > 0 and paired_deg is None:
        raise ValidationError("paired degraded image required when p2 > 0")
    if paired_deg is not None and paired_deg.shape != clean.shape:
        raise ValidationError(
            f"shape mismatch: clean {clean.shape} vs paired {paired_deg.shape}"
        )
    rng = np.random.default_rng(seed)
    branch = int(rng.choice(3, p=[cfg.p0, cfg.p1, cfg.p2]))
    if branch == 0:
        return np.asarray(clean, dtype=np.float32).copy(), 0
    if branch == 1:
        sev = schedule_value(cfg.sev_schedule, t)
        if cfg.compose:
            mask = rng.random(len(KINDS)) < 0.5
            if not mask.any():
                mask[rng.integers(len(KINDS))] = True
            picked = [k for k, m in zip(KINDS, mask) if m]
        else:
            picked = [str(rng.choice(KINDS))]
        out = clean
        for kind in picked:
            sub = int(rng.integers(2**31))
            out = apply_degradation(out, DegradationSpec(kind, sev), sub)
        return out, 1
    beta = schedule_value(cfg.beta_schedule, t)
    blended = (1.0 - beta) * clean + beta * paired_deg
    return blended.astype(np.float32), 2
