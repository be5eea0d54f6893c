import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from xrdenoise import metrics
from xrdenoise.metrics import SsimConfig, evaluate_all, psnr, psnr_from_rmse, rmse, snr, ssim


def reference_ssim(a, b, size=11, sigma=1.5, k1=0.01, k2=0.03, L=1.0):
    """Window-by-window SSIM with an explicit 2-D Gaussian kernel."""
    a = np.asarray(a, np.float64)
    b = np.asarray(b, np.float64)
    r = np.arange(size) - (size - 1) / 2
    yy, xx = np.meshgrid(r, r, indexing="ij")
    w = np.exp(-(yy**2 + xx**2) / (2 * sigma**2))
    w /= w.sum()
    c1, c2 = (k1 * L) ** 2, (k2 * L) ** 2
    vals = []
    for i in range(a.shape[0] - size + 1):
        for j in range(a.shape[1] - size + 1):
            pa = a[i : i + size, j : j + size]
            pb = b[i : i + size, j : j + size]
            ma, mb = np.sum(w * pa), np.sum(w * pb)
            va = np.sum(w * (pa - ma) ** 2)
            vb = np.sum(w * (pb - mb) ** 2)
            cov = np.sum(w * (pa - ma) * (pb - mb))
            vals.append(((2 * ma * mb + c1) * (2 * cov + c2))
                        / ((ma**2 + mb**2 + c1) * (va + vb + c2)))
    return float(np.mean(vals))


const = lambda v, shape=(32, 32): np.full(shape, v, np.float64)  # noqa: E731


class TestRmse:
    def test_identical(self, rng):
        a = rng.random((8, 8))
        assert rmse(a, a) == 0.0

    def test_offset(self):
        assert rmse(const(0.3), const(0.4)) == pytest.approx(0.1, abs=1e-12)

    def test_mismatch(self):
        with pytest.raises(ValueError):
            rmse(np.zeros((3, 3)), np.zeros((3, 4)))


class TestPsnr:
    def test_rmse_tenth_is_20db(self):
        assert psnr_from_rmse(0.1) == 20.0

    def test_identical_sentinel(self, rng):
        a = rng.random((8, 8))
        assert psnr(a, a) == 99.0

    def test_table_scale(self):
        assert psnr_from_rmse(0.0170) == pytest.approx(35.39, abs=0.005)

    def test_offset_pair(self):
        assert psnr(const(0.5), const(0.6)) == pytest.approx(20.0, abs=1e-9)


class TestSnr:
    def test_offset(self):
        assert snr(const(0.5), const(0.6)) == pytest.approx(10 * math.log10(25), abs=1e-9)
        assert snr(const(0.5), const(0.6)) == pytest.approx(13.979, abs=1e-3)

    def test_identical(self, rng):
        a = rng.random((8, 8))
        assert snr(a, a) == 99.0

    def test_gap_to_psnr_is_signal_power(self, rng):
        a = rng.random((16, 16))
        b = np.clip(a + rng.normal(0, 0.05, a.shape), 0, 1)
        gap = psnr(a, b) - snr(a, b)
        assert gap == pytest.approx(10 * math.log10(1 / np.mean(a * a)), abs=1e-9)

    def test_table_gap_implies_plausible_power(self):
        # 35.52 dB PSNR vs 29.84 dB SNR -> mean squared intensity 10^(-0.568)
        assert 10 ** (-(35.52 - 29.84) / 10) == pytest.approx(0.27, abs=0.005)


class TestSsim:
    def test_identical_is_one(self, rng):
        a = rng.random((20, 20))
        assert ssim(a, a) == 1.0

    def test_constants(self):
        expect = (2 * 0.5 * 0.6 + 1e-4) / (0.25 + 0.36 + 1e-4)
        assert expect == pytest.approx(0.98361, abs=1e-5)
        assert ssim(const(0.5), const(0.6)) == pytest.approx(expect, abs=1e-9)

    @pytest.mark.parametrize("seed", range(3))
    def test_matches_reference(self, seed):
        r = np.random.default_rng(seed)
        a = r.random((40, 40))
        b = np.clip(a + r.normal(0, 0.1, a.shape), 0, 1)
        assert ssim(a, b) == pytest.approx(reference_ssim(a, b), abs=1e-6)

    def test_window_normalized(self):
        g = metrics.gaussian_window()
        assert np.outer(g, g).sum() == pytest.approx(1.0, abs=1e-15)

    def test_too_small(self):
        with pytest.raises(ValueError):
            ssim(np.zeros((10, 20)), np.zeros((10, 20)))

    def test_config_changes_result(self, rng):
        a, b = rng.random((24, 24)), rng.random((24, 24))
        assert ssim(a, b, SsimConfig(window=7)) != ssim(a, b)


class TestEvaluateAll:
    def test_identical(self, rng):
        a = rng.random((16, 16))
        assert evaluate_all(a, a).as_tuple() == (0.0, 99.0, 1.0, 99.0)

    def test_offset_pair(self):
        rec = evaluate_all(const(0.5), const(0.6))
        assert rec.rmse == pytest.approx(0.1, abs=1e-12)
        assert rec.psnr == pytest.approx(20.0, abs=1e-9)
        assert rec.ssim == pytest.approx(0.98361, abs=1e-5)
        assert rec.snr == pytest.approx(13.979, abs=1e-3)

    def test_composition(self, rng):
        a, b = rng.random((16, 16)), rng.random((16, 16))
        assert evaluate_all(a, b).as_tuple() == (rmse(a, b), psnr(a, b), ssim(a, b), snr(a, b))

    def test_csv_precision(self):
        assert evaluate_all(const(0.5), const(0.6)).csv() == "0.1000,20.00,0.9836,13.98"


unit_images = arrays(np.float64, (12, 12), elements=st.floats(0, 1))


class TestProperties:
    @given(unit_images, unit_images)
    @settings(max_examples=60, deadline=None)
    def test_symmetry(self, a, b):
        assert rmse(a, b) == rmse(b, a)
        assert ssim(a, b) == ssim(b, a)

    @given(unit_images, unit_images)
    @settings(max_examples=60, deadline=None)
    def test_ssim_bounded(self, a, b):
        s = ssim(a, b)
        assert s <= 1.0 + 1e-12
        if not np.array_equal(a, b):
            assert s < 1.0 or np.allclose(a, b)

    @given(unit_images, st.floats(-0.5, 0.5))
    @settings(max_examples=60, deadline=None)
    def test_clamped_offset_error_bound(self, a, delta):
        assert rmse(a, np.clip(a + delta, 0, 1)) <= abs(delta) + 1e-12

    def test_psnr_monotone_in_rmse(self, rng):
        a = rng.random((16, 16))
        noise = rng.normal(0, 1, a.shape)
        vals = [psnr(a, a + s * noise) for s in (0.01, 0.02, 0.05, 0.1, 0.3)]
        assert all(x > y for x, y in zip(vals, vals[1:]))
