import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from latres.dataset import DatasetManifest, build_dataset
from latres.errors import ValidationError
from latres.estimator import LatentRestorationEstimator, check_image_batch


def test_get_set_params_round_trip():
    est = LatentRestorationEstimator(alpha=0.7, vae_steps=10)
    params = est.get_params()
    assert params["alpha"] == 0.7 and params["vae_steps"] == 10
    cloned = clone(est)
    assert cloned.get_params() == params
    est.set_params(alpha=0.1)
    assert est.alpha == 0.1


def test_transform_before_fit_raises():
    est = LatentRestorationEstimator()
    with pytest.raises(NotFittedError):
        est.transform(np.zeros((1, 64, 64, 3), np.float32))


def test_input_validation():
    with pytest.raises(ValidationError):
        check_image_batch(np.zeros((2, 64, 64, 4)))
    with pytest.raises(ValidationError):
        check_image_batch(np.full((2, 64, 64, 3), 2.0))


def test_fit_transform_and_score():
    ds = build_dataset(DatasetManifest(count=8, resolution=64, seed=4))
    est = LatentRestorationEstimator(
        alpha=0.5, vae_steps=12, restorer_steps=8, adapter_steps=2, batch_size=4, seed=0
    )
    est.fit(ds.clean)
    deg = ds.degraded["gaussian_noise"][:3]
    out = est.transform(deg)
    assert out.shape == deg.shape
    assert out.dtype == np.float32
    assert 0.0 <= out.min() and out.max() <= 1.0
    score = est.score(deg, ds.clean[:3])
    assert np.isfinite(score)


def test_fit_accepts_prebuilt_dataset():
    ds = build_dataset(DatasetManifest(count=6, resolution=64, seed=5))
    est = LatentRestorationEstimator(vae_steps=6, restorer_steps=4, adapter_steps=1, batch_size=4)
    est.fit(ds)
    assert est.bundle_.stage == "adapters"
