#!/usr/bin/env python3
"""Regenerate the degraded sample images bundled with the service."""

import json
from pathlib import Path

from latres.dataset import DatasetManifest, build_dataset
from latres.imageio import save_image

OUT = Path(__file__).resolve().parents[1] / "src" / "latres" / "assets" / "samples"
KINDS = ("gaussian_noise", "gaussian_blur", "low_light")


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    ds = build_dataset(
        DatasetManifest(count=len(KINDS), resolution=64, degradations=KINDS, seed=2024)
    )
    index = []
    for i, kind in enumerate(KINDS):
        sample_id = f"{kind}_{i:02d}"
        save_image(OUT / f"{sample_id}.png", ds.degraded[kind][i])
        save_image(OUT / f"{sample_id}_ref.png", ds.clean[i])
        index.append({"id": sample_id, "kind": kind})
    (OUT / "samples.json").write_text(json.dumps(index, indent=2) + "\n")
    print(f"wrote {len(index)} samples to {OUT}")


if __name__ == "__main__":
    main()
