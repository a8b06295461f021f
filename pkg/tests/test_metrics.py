import numpy as np
import pytest

from latres.degrade import DegradationSpec, apply_degradation
from latres.errors import ValidationError
from latres.metrics import compute_metrics, lpips_proxy, psnr, ssim
from latres.vae import FeaturePrior


@pytest.fixture(scope="module")
def prior():
    return FeaturePrior(seed=0, feature_dim=64)


def _img(seed, size=64):
    return np.random.default_rng(seed).random((size, size, 3)).astype(np.float32)


class TestPSNR:
    def test_identical_is_infinite(self):
        x = _img(0)
        assert psnr(x, x) == float("inf")

    def test_constant_offset_closed_form(self):
        a = np.full((16, 16, 3), 0.4)
        b = np.full((16, 16, 3), 0.5)
        assert psnr(a, b) == pytest.approx(20.0, abs=1e-9)

    def test_matches_direct_formula(self):
        a, b = _img(1), _img(2)
        expected = 10 * np.log10(1.0 / np.mean((a.astype(np.float64) - b) ** 2))
        assert psnr(a, b) == pytest.approx(expected, abs=1e-6)

    def test_symmetric(self):
        a, b = _img(3), _img(4)
        assert psnr(a, b) == psnr(b, a)

    def test_shape_mismatch(self):
        with pytest.raises(ValidationError):
            psnr(np.zeros((4, 4, 3)), np.zeros((4, 5, 3)))


class TestSSIM:
    def test_identical_is_one(self):
        x = _img(5)
        assert ssim(x, x) == pytest.approx(1.0, abs=1e-12)

    def test_inverted_noise_is_negative(self):
        x = (0.2 + 0.6 * np.random.default_rng(6).random((64, 64, 3))).astype(np.float32)
        assert ssim(x, 1.0 - x) < 0.0

    def test_matches_reference_implementation(self):
        from skimage.metrics import structural_similarity

        for seed in range(10):
            rng = np.random.default_rng(seed)
            a = rng.random((48, 48, 3))
            b = np.clip(a + 0.1 * rng.standard_normal(a.shape), 0, 1)
            ours = ssim(a, b)
            ref = structural_similarity(
                a.mean(axis=2),
                b.mean(axis=2),
                win_size=11,
                gaussian_weights=True,
                sigma=1.5,
                use_sample_covariance=False,
                data_range=1.0,
            )
            assert ours == pytest.approx(ref, abs=1e-4)

    def test_symmetric_within_fp(self):
        a, b = _img(7), _img(8)
        assert ssim(a, b) == pytest.approx(ssim(b, a), abs=1e-9)

    def test_too_small_image_rejected(self):
        with pytest.raises(ValidationError):
            ssim(np.zeros((8, 8, 3)), np.zeros((8, 8, 3)))


class TestLpipsProxy:
    def test_identical_is_zero(self, prior):
        x = _img(9)
        assert lpips_proxy(x, x, prior) == 0.0

    def test_symmetric_exactly(self, prior):
        a, b = _img(10), _img(11)
        assert lpips_proxy(a, b, prior) == lpips_proxy(b, a, prior)

    def test_monotone_in_degradation_severity(self, prior):
        hits = 0
        for seed in range(100):
            clean = _img(100 + seed, 32)
            mild = apply_degradation(clean, DegradationSpec("gaussian_noise", 0.2), seed)
            harsh = apply_degradation(clean, DegradationSpec("gaussian_noise", 0.8), seed)
            if lpips_proxy(clean, harsh, prior) > lpips_proxy(clean, mild, prior):
                hits += 1
        assert hits >= 95


def test_metrics_report_shape(prior):
    a, b = _img(12), _img(13)
    report = compute_metrics(a, b, prior)
    d = report.to_dict()
    assert set(d) == {"psnr", "ssim", "lpips_proxy", "hf_energy_gap"}
    assert d["lpips_proxy"] >= 0.0
    same = compute_metrics(a, a, prior)
    assert same.psnr == float("inf") and same.ssim == pytest.approx(1.0)
    assert same.hf_energy_gap == 0.0
