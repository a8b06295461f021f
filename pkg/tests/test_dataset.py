import hashlib
from pathlib import Path

import numpy as np
import pytest

from latres.dataset import (
    DatasetManifest,
    build_dataset,
    load_dataset,
    save_dataset,
)
from latres.errors import ConfigurationError, IngestionError
from latres.freq import hf_energy_proportion
from latres.imageio import save_image


def _tree_hash(root: Path) -> str:
    digest = hashlib.sha256()
    for p in sorted(root.rglob("*")):
        if p.is_file():
            digest.update(p.name.encode())
            digest.update(p.read_bytes())
    return digest.hexdigest()


def test_procedural_build_is_deterministic(tmp_path):
    manifest = DatasetManifest(count=4, resolution=64, seed=7)
    a, b = build_dataset(manifest), build_dataset(manifest)
    assert np.array_equal(a.clean, b.clean)
    for kind in a.degraded:
        assert np.array_equal(a.degraded[kind], b.degraded[kind])
    save_dataset(a, tmp_path / "one")
    save_dataset(b, tmp_path / "two")
    assert _tree_hash(tmp_path / "one") == _tree_hash(tmp_path / "two")


def test_save_load_round_trip(tmp_path):
    ds = build_dataset(DatasetManifest(count=3, resolution=32, seed=5))
    save_dataset(ds, tmp_path / "ds")
    loaded = load_dataset(tmp_path / "ds")
    assert loaded.manifest == ds.manifest
    assert np.array_equal(loaded.clean, ds.clean)
    for kind in ds.degraded:
        assert np.array_equal(loaded.degraded[kind], ds.degraded[kind])


def test_paired_samples_exist_for_every_kind():
    ds = build_dataset(DatasetManifest(count=5, resolution=32, seed=1))
    assert set(ds.degraded) == set(ds.manifest.degradations)
    for arr in ds.degraded.values():
        assert arr.shape == ds.clean.shape


def test_folder_ingestion(tmp_path):
    src = tmp_path / "imgs"
    src.mkdir()
    rng = np.random.default_rng(0)
    save_image(src / "a.png", rng.random((256, 256, 3)).astype(np.float32))
    ds = build_dataset(
        DatasetManifest(source="folder", folder=str(src), count=4, resolution=64, seed=0)
    )
    assert len(ds) >= 1
    assert ds.clean.shape[1:] == (64, 64, 3)


def test_folder_with_unreadable_file_warns_and_skips(tmp_path):
    src = tmp_path / "imgs"
    src.mkdir()
    save_image(src / "ok.png", np.random.default_rng(1).random((64, 64, 3)).astype(np.float32))
    (src / "broken.png").write_bytes(b"not a png at all")
    with pytest.warns(UserWarning, match="skipping"):
        ds = build_dataset(
            DatasetManifest(source="folder", folder=str(src), count=8, resolution=32, seed=0)
        )
    assert len(ds) == 1


def test_empty_folder_rejected(tmp_path):
    src = tmp_path / "empty"
    src.mkdir()
    with pytest.raises(IngestionError):
        build_dataset(DatasetManifest(source="folder", folder=str(src), resolution=32))


def test_folder_source_requires_path():
    with pytest.raises(ConfigurationError):
        DatasetManifest(source="folder")


def test_procedural_images_have_mixed_spectrum():
    ds = build_dataset(DatasetManifest(count=16, resolution=64, seed=9))
    props = [hf_energy_proportion(ds.clean[i]) for i in range(len(ds))]
    assert all(0.0 < p < 1.0 for p in props)


def test_sixteen_bit_png_round_trip(tmp_path):
    from latres.imageio import load_image, save_image

    img = np.random.default_rng(3).random((32, 32, 3)).astype(np.float32)
    p8, p16 = tmp_path / "a8.png", tmp_path / "a16.png"
    save_image(p8, img, bits=8)
    save_image(p16, img, bits=16)
    err8 = np.abs(load_image(p8) - img).max()
    err16 = np.abs(load_image(p16) - img).max()
    assert err16 < err8
    assert err16 <= 0.5 / 65535 + 1e-7
