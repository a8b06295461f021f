"""Dataset construction: procedural clean/degraded pairs or folder ingestion.

On disk a dataset is a directory of PNGs plus a manifest:

    manifest.json
    clean/0000.png ...
    deg/<kind>/0000.png ...

Procedural images composite a color gradient, geometric shapes, and
band-limited noise, so the set contains both low- and high-frequency
content. Generation is per-sample seeded, hence deterministic and
order-independent.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from . import serialization
from .degrade import KINDS, PAIR_SEVERITY, DegradationSpec, apply_degradation, derive_seed
from .errors import ConfigurationError, IngestionError, ValidationError
from .imageio import load_image, save_image, snap_to_grid

MANIFEST_NAME = "manifest.json"


@dataclass(frozen=True)
class DatasetManifest:
    source: str = "procedural"  # "procedural" | "folder"
    count: int = 64
    resolution: int = 64
    degradations: tuple[str, ...] = ("gaussian_noise", "gaussian_blur", "low_light")
    paired: bool = True
    seed: int = 0
    folder: str | None = None

    def __post_init__(self):
        if self.source not in ("procedural", "folder"):
            raise ConfigurationError(f"unknown dataset source: {self.source!r}")
        unknown = [k for k in self.degradations if k not in KINDS]
        if unknown:
            raise ConfigurationError(f"unknown degradation kinds: {unknown}")
        if self.source == "folder" and not self.folder:
            raise ConfigurationError("folder source requires a folder path")
        if self.resolution < 16:
            raise ValidationError(f"resolution must be >= 16, got {self.resolution}")


@dataclass
class RestorationDataset:
    manifest: DatasetManifest
    clean: np.ndarray  # [N, H, W, 3] float32 in [0, 1]
    degraded: dict[str, np.ndarray] = field(default_factory=dict)

    def __len__(self) -> int:
        return self.clean.shape[0]

    def pair(self, kind: str, i: int) -> tuple[np.ndarray, np.ndarray]:
        """(degraded, clean) pair for one sample."""
        return self.degraded[kind][i], self.clean[i]


def _gradient(res: int, rng: np.random.Generator) -> np.ndarray:
    angle = rng.uniform(0, 2 * np.pi)
    c0 = rng.uniform(0.0, 1.0, size=3)
    c1 = rng.uniform(0.0, 1.0, size=3)
    yy, xx = np.meshgrid(np.linspace(0, 1, res), np.linspace(0, 1, res), indexing="ij")
    t = np.cos(angle) * xx + np.sin(angle) * yy
    t = (t - t.min()) / max(t.max() - t.min(), 1e-9)
    return (c0 + t[:, :, None] * (c1 - c0)).astype(np.float32)


def _paint_shapes(img: np.ndarray, rng: np.random.Generator) -> None:
    res = img.shape[0]
    yy, xx = np.meshgrid(np.arange(res), np.arange(res), indexing="ij")
    for _ in range(int(rng.integers(3, 7))):
        color = rng.uniform(0.0, 1.0, size=3)
        alpha = rng.uniform(0.6, 1.0)
        if rng.random() < 0.5:
            cy, cx = rng.uniform(0, res, size=2)
            r = rng.uniform(0.06, 0.28) * res
            mask = (yy - cy) ** 2 + (xx - cx) ** 2 < r * r
        else:
            y0, y1 = np.sort(rng.integers(0, res, size=2))
            x0, x1 = np.sort(rng.integers(0, res, size=2))
            mask = (yy >= y0) & (yy <= y1 + 1) & (xx >= x0) & (xx <= x1 + 1)
        img[mask] = (1 - alpha) * img[mask] + alpha * color


def _band_noise(res: int, rng: np.random.Generator) -> np.ndarray:
    from .degrade import _blur

    noise = rng.standard_normal((res, res, 3)).astype(np.float32)
    sigma = rng.uniform(0.8, 1.5)
    amp = rng.uniform(0.02, 0.05)
    return amp * _blur(noise, sigma)


def _paint_textures(img: np.ndarray, rng: np.random.Generator) -> None:
    # an oriented sinusoid patch: structured high-frequency content that
    # degradations visibly destroy but a compact model can reproduce
    res = img.shape[0]
    yy, xx = np.meshgrid(np.arange(res), np.arange(res), indexing="ij")
    theta = rng.uniform(0, np.pi)
    freq = rng.uniform(0.1, 0.25)
    stripe = 0.5 * (1 + np.sin(2 * np.pi * freq * (np.cos(theta) * xx + np.sin(theta) * yy)))
    y0, x0 = rng.integers(0, res // 2, size=2)
    h, w = rng.integers(res // 3, res // 2 + 8, size=2)
    alpha = rng.uniform(0.2, 0.4)
    region = img[y0 : y0 + h, x0 : x0 + w]
    region[:] = (1 - alpha) * region + alpha * stripe[y0 : y0 + h, x0 : x0 + w, None]


def procedural_image(resolution: int, seed: int) -> np.ndarray:
    """One synthetic clean image; deterministic in (resolution, seed)."""
    rng = np.random.default_rng(seed)
    img = _gradient(resolution, rng)
    _paint_shapes(img, rng)
    _paint_textures(img, rng)
    img = img + _band_noise(resolution, rng)
    return snap_to_grid(np.clip(img, 0.0, 1.0))


def _load_folder(manifest: DatasetManifest) -> np.ndarray:
    root = Path(manifest.folder)
    files = sorted(
        p for p in root.iterdir() if p.suffix.lower() in (".png", ".jpg", ".jpeg", ".bmp")
    )
    if not files:
        raise IngestionError(f"no image files found in {root}")
    images = []
    for p in files:
        if manifest.count and len(images) >= manifest.count:
            break
        try:
            img = load_image(p)
        except Exception as exc:  # noqa: BLE001 - per-file skip is the contract
            warnings.warn(f"skipping unreadable file {p}: {exc}")
            continue
        h, w = img.shape[:2]
        side = min(h, w)
        y0, x0 = (h - side) // 2, (w - side) // 2
        crop = img[y0 : y0 + side, x0 : x0 + side]
        res = manifest.resolution
        pil = Image.fromarray((crop * 255).astype(np.uint8))
        out = np.asarray(pil.resize((res, res), Image.BICUBIC), dtype=np.float32) / 255.0
        images.append(snap_to_grid(out))
    if not images:
        raise IngestionError(f"no readable image files in {root}")
    return np.stack(images)


def build_dataset(manifest: DatasetManifest) -> RestorationDataset:
    """Materialize the clean set and (when paired) its degraded variants."""
    if manifest.source == "procedural":
        clean = np.stack(
            [
                procedural_image(manifest.resolution, derive_seed(manifest.seed, i))
                for i in range(manifest.count)
            ]
        )
    else:
        clean = _load_folder(manifest)

    degraded: dict[str, np.ndarray] = {}
    if manifest.paired:
        for kind in manifest.degradations:
            spec = DegradationSpec(kind, PAIR_SEVERITY)
            degraded[kind] = np.stack(
                [
                    snap_to_grid(
                        apply_degradation(clean[i], spec, derive_seed(manifest.seed, i, kind))
                    )
                    for i in range(clean.shape[0])
                ]
            )
    return RestorationDataset(manifest=manifest, clean=clean, degraded=degraded)


def save_dataset(ds: RestorationDataset, out_dir) -> None:
    out = Path(out_dir)
    (out / "clean").mkdir(parents=True, exist_ok=True)
    for i in range(len(ds)):
        save_image(out / "clean" / f"{i:04d}.png", ds.clean[i])
    for kind, arr in ds.degraded.items():
        kd = out / "deg" / kind
        kd.mkdir(parents=True, exist_ok=True)
        for i in range(arr.shape[0]):
            save_image(kd / f"{i:04d}.png", arr[i])
    (out / MANIFEST_NAME).write_text(serialization.pretty_json(ds.manifest))


def load_dataset(path) -> RestorationDataset:
    root = Path(path)
    mf = root / MANIFEST_NAME
    if not mf.exists():
        raise IngestionError(f"no {MANIFEST_NAME} in {root}")
    manifest = serialization.from_dict(DatasetManifest, json.loads(mf.read_text()))
    clean_files = sorted((root / "clean").glob("*.png"))
    if not clean_files:
        raise IngestionError(f"no clean samples under {root}")
    clean = np.stack([load_image(p) for p in clean_files])
    degraded = {}
    for kind in manifest.degradations:
        kd = root / "deg" / kind
        if kd.is_dir():
            degraded[kind] = np.stack([load_image(p) for p in sorted(kd.glob("*.png"))])
    if manifest.paired:
        for kind, arr in degraded.items():
            if arr.shape[0] != clean.shape[0]:
                raise IngestionError(
                    f"paired dataset {root} has {arr.shape[0]} {kind} samples "
                    f"for {clean.shape[0]} clean samples"
                )
    return RestorationDataset(manifest=manifest, clean=clean, degraded=degraded)
