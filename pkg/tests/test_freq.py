import numpy as np
import pytest
import torch
from hypothesis import given, settings
from hypothesis import strategies as st

from latres.errors import ValidationError
from latres.freq import (
    CDCSReport,
    HFOperatorConfig,
    SpectralBands,
    cdcs,
    dct2,
    dct_matrix,
    hf_energy_proportion,
    high_pass,
    idct2,
    lf_energy_proportion,
    low_pass,
    radial_frequency,
)


def brute_force_dct2(x: np.ndarray) -> np.ndarray:
    """O(N^4) orthonormal type-II 2-D DCT, straight from the definition."""
    n, m = x.shape
    out = np.zeros((n, m))
    for u in range(n):
        for v in range(m):
            acc = 0.0
            for i in range(n):
                for j in range(m):
                    acc += (
                        x[i, j]
                        * np.cos(np.pi * (2 * i + 1) * u / (2 * n))
                        * np.cos(np.pi * (2 * j + 1) * v / (2 * m))
                    )
            su = np.sqrt(1.0 / n) if u == 0 else np.sqrt(2.0 / n)
            sv = np.sqrt(1.0 / m) if v == 0 else np.sqrt(2.0 / m)
            out[u, v] = su * sv * acc
    return out


class TestDCT:
    def test_matches_brute_force_oracle(self):
        x = np.random.default_rng(0).random((8, 8))
        assert np.abs(dct2(x) - brute_force_dct2(x)).max() < 1e-8

    def test_constant_array_is_dc_only(self):
        v = 0.7
        c = dct2(np.full((6, 6), v))
        assert c[0, 0] == pytest.approx(6 * v, abs=1e-9)
        c[0, 0] = 0.0
        assert np.abs(c).max() < 1e-12

    def test_round_trip(self):
        x = np.random.default_rng(1).random((16, 12))
        assert np.abs(idct2(dct2(x)) - x).max() < 1e-6

    def test_parseval(self):
        x = np.random.default_rng(2).random((32, 32))
        c = dct2(x)
        assert np.sum(x**2) == pytest.approx(np.sum(c**2), rel=1e-6)

    def test_rejects_bad_shapes(self):
        with pytest.raises(ValidationError):
            dct2(np.zeros((0, 4)))
        with pytest.raises(ValidationError):
            dct2(np.zeros(5))


class TestHighPass:
    def test_constant_maps_to_zero(self):
        const = np.full((16, 16, 3), 0.4, np.float32)
        assert np.abs(high_pass(const)).max() < 1e-6
        assert np.abs(high_pass(const, HFOperatorConfig("dct_mask", cutoff=0.5))).max() < 1e-6

    def test_complement_sums_back_exactly(self):
        x = torch.rand(2, 3, 48, 48, generator=torch.Generator().manual_seed(0)).double()
        cfg = HFOperatorConfig()
        assert torch.equal(high_pass(x, cfg) + low_pass(x, cfg), x)
        # float32: within one ulp
        x32 = x.float()
        err = (high_pass(x32, cfg) + low_pass(x32, cfg) - x32).abs().max()
        assert float(err) <= 1.2e-7

    def test_sinusoid_energy_retention(self):
        # normalized frequency 0.45 is far above the sigma=2 response knee;
        # oracle: AC energy ratio measured by FFT
        yy, xx = np.meshgrid(np.arange(64), np.arange(64), indexing="ij")
        sin = np.sin(2 * np.pi * 0.45 * xx).astype(np.float32)
        out = high_pass(sin, HFOperatorConfig(sigma=2.0))

        def ac_energy(z):
            z = z - z.mean()
            return float((np.abs(np.fft.fft2(z)) ** 2).sum())

        assert ac_energy(out) / ac_energy(sin) >= 0.90

    def test_linearity(self):
        rng = np.random.default_rng(3)
        x = rng.random((20, 20)).astype(np.float32)
        y = rng.random((20, 20)).astype(np.float32)
        a, b = 1.7, -0.6
        for cfg in (HFOperatorConfig(), HFOperatorConfig("dct_mask", cutoff=0.4)):
            lhs = high_pass(a * x + b * y, cfg)
            rhs = a * high_pass(x, cfg) + b * high_pass(y, cfg)
            assert np.abs(lhs - rhs).max() < 1e-5

    def test_validation(self):
        with pytest.raises(ValidationError):
            HFOperatorConfig(sigma=0.0)
        with pytest.raises(ValidationError):
            HFOperatorConfig("dct_mask", cutoff=1.5)
        with pytest.raises(ValidationError):
            high_pass(np.zeros((4, 4)), HFOperatorConfig(sigma=2.0))  # kernel support 6 > 4

    def test_differentiable_for_torch_inputs(self):
        x = torch.rand(1, 2, 16, 16, dtype=torch.float64, requires_grad=True)
        for cfg in (HFOperatorConfig(), HFOperatorConfig("dct_mask", cutoff=0.5)):
            high_pass(x, cfg).sum().backward()
            assert x.grad is not None
            x.grad = None


class TestEnergyProportion:
    def test_constant_is_zero(self):
        assert hf_energy_proportion(np.full((16, 16), 0.3)) == 0.0

    def test_top_basis_signal_is_all_high(self):
        # outer product of the highest 1-D DCT basis vectors: all AC energy
        # sits in the single top coefficient, so the proportion is exactly 1
        n = 16
        basis = dct_matrix(n)[n - 1]
        sig = np.outer(basis, basis)
        assert hf_energy_proportion(sig, SpectralBands(cutoff=0.5)) == pytest.approx(1.0)

    def test_pixel_checkerboard_energy_vs_oracle(self):
        # the alternating pattern concentrates near (but not exactly at) the
        # top DCT coefficient; compare against the dct2 oracle value
        n = 16
        cb = ((np.indices((n, n)).sum(axis=0)) % 2).astype(np.float64)
        coeffs = dct2(cb) ** 2
        rho = radial_frequency(n, n)
        dc = np.zeros_like(rho, dtype=bool)
        dc[0, 0] = True
        expected = coeffs[(rho >= 0.5) & ~dc].sum() / coeffs[~dc].sum()
        got = hf_energy_proportion(cb, SpectralBands(cutoff=0.5))
        assert got == pytest.approx(expected, abs=1e-12)
        assert got > 0.99

    def test_white_noise_matches_flat_spectrum(self):
        rho = radial_frequency(64, 64)
        expected = ((rho >= 0.5).sum()) / (64 * 64 - 1)
        props = [
            hf_energy_proportion(np.random.default_rng(s).random((64, 64)))
            for s in range(100)
        ]
        assert np.mean(props) == pytest.approx(expected, abs=0.02)

    def test_hf_plus_lf_is_one(self):
        x = np.random.default_rng(5).random((24, 24, 3))
        bands = SpectralBands(cutoff=0.5)
        assert hf_energy_proportion(x, bands) + lf_energy_proportion(x, bands) == pytest.approx(1.0)


class TestCDCS:
    def test_identical_sets_give_one(self):
        rng = np.random.default_rng(6)
        lat = [rng.random((4, 4, 2)) for _ in range(3)]
        report = cdcs({"a": lat, "b": [x.copy() for x in lat]})
        assert report.overall == pytest.approx(1.0)
        assert report.num_contents == 3 and report.num_degradations == 2

    def test_orthogonal_vectors(self):
        report = cdcs({"a": [np.array([1.0, 0.0])], "b": [np.array([0.0, 1.0])]})
        assert report.overall == pytest.approx(0.0, abs=1e-12)

    def test_hand_computed_cosine(self):
        report = cdcs({"a": [np.array([1.0, 1.0])], "b": [np.array([1.0, 0.0])]})
        assert report.overall == pytest.approx(1.0 / np.sqrt(2.0), abs=1e-12)

    def test_three_way_fixture(self):
        # pairwise cosines of three fixed vectors, averaged by hand
        u = np.array([1.0, 0.0])
        v = np.array([1.0, 1.0]) / np.sqrt(2)
        w = np.array([0.0, 1.0])
        expected = (np.dot(u, v) + np.dot(u, w) + np.dot(v, w)) / 3.0
        report = cdcs({"a": [u], "b": [v], "c": [w]})
        assert report.overall == pytest.approx(expected, abs=1e-12)

    def test_zero_norm_pair_skipped_with_warning(self):
        with pytest.warns(UserWarning, match="zero-norm"):
            report = cdcs(
                {
                    "a": [np.array([0.0, 0.0]), np.array([1.0, 0.0])],
                    "b": [np.array([1.0, 1.0]), np.array([1.0, 0.0])],
                }
            )
        assert report.overall == pytest.approx(1.0)

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValidationError):
            cdcs({"a": [np.zeros(3)], "b": [np.zeros(4)]})
        with pytest.raises(ValidationError):
            cdcs({"a": [np.zeros(3)]})

    def test_per_band_report(self):
        rng = np.random.default_rng(8)
        lat = {
            "a": [rng.random((8, 8, 2)) for _ in range(2)],
            "b": [rng.random((8, 8, 2)) for _ in range(2)],
        }
        report = cdcs(lat, bands=SpectralBands(cutoff=0.5))
        assert set(report.per_band) == {"low", "high"}
        for v in report.per_band.values():
            assert -1.0 <= v <= 1.0

    @settings(max_examples=20, deadline=None)
    @given(scale=st.floats(0.1, 50.0), seed=st.integers(0, 100))
    def test_scale_invariance(self, scale, seed):
        rng = np.random.default_rng(seed)
        lat = {
            "a": [rng.standard_normal((3, 3, 2)) for _ in range(2)],
            "b": [rng.standard_normal((3, 3, 2)) for _ in range(2)],
        }
        base = cdcs(lat).overall
        scaled = cdcs(
            {k: [scale * x for x in v] for k, v in lat.items()}
        ).overall
        assert scaled == pytest.approx(base, abs=1e-9)

    def test_permutation_symmetry(self):
        rng = np.random.default_rng(9)
        groups = {k: [rng.standard_normal((4, 4))] for k in ("a", "b", "c")}
        renamed = {"z": groups["a"], "y": groups["b"], "x": groups["c"]}
        assert cdcs(groups).overall == pytest.approx(cdcs(renamed).overall, abs=1e-12)


def test_cdcs_identical_sets_are_one_in_every_band():
    rng = np.random.default_rng(12)
    lat = [rng.random((8, 8, 2)) for _ in range(2)]
    report = cdcs({"a": lat, "b": [x.copy() for x in lat]}, bands=SpectralBands(cutoff=0.5))
    assert report.overall == pytest.approx(1.0)
    for value in report.per_band.values():
        assert value == pytest.approx(1.0)
