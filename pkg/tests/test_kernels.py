import math

import numpy as np
import pytest

from xrdenoise import _pykernels, kernels

compiled = pytest.importorskip("xrdenoise._ckernels")


class TestBackendEquivalence:
    def test_poisson_identical_streams(self):
        lam = np.random.default_rng(1).uniform(0, 400, 3000)
        lam[::5] = 0.0
        lam[::7] *= 0.02  # inversion range
        a = compiled.poisson_array(lam, np.random.default_rng(9))
        b = _pykernels.poisson_array(lam, np.random.default_rng(9))
        np.testing.assert_array_equal(a, b)

    def test_poisson_leaves_generator_in_same_state(self):
        g1, g2 = np.random.default_rng(3), np.random.default_rng(3)
        compiled.poisson_array(np.full(500, 42.0), g1)
        _pykernels.poisson_array(np.full(500, 42.0), g2)
        assert g1.random() == g2.random()

    @pytest.mark.parametrize("lam", [0.0, 0.3, 29.999, 30.0, 1e4])
    def test_scalar(self, lam):
        assert compiled.poisson_scalar(lam, np.random.default_rng(5)) == (
            _pykernels.poisson_scalar(lam, np.random.default_rng(5))
        )

    def test_bilinear(self, rng):
        img = rng.random((23, 31))
        ys = rng.uniform(-2, 25, (40, 17))
        xs = rng.uniform(-2, 33, (40, 17))
        np.testing.assert_array_equal(
            compiled.bilinear_sample(img, ys, xs, 0.0),
            _pykernels.bilinear_sample(img, ys, xs, 0.0),
        )

    @pytest.mark.parametrize("x", [1.0, 2.0, 2.5, 6.0, 7.0, 31.0, 151.0, 1e5])
    def test_loggam(self, x):
        assert compiled.loggam(x) == _pykernels.loggam(x)
        assert _pykernels.loggam(x) == pytest.approx(math.lgamma(x), rel=1e-13, abs=1e-13)


def test_backend_switch_roundtrip():
    prev = kernels.use_backend("python")
    try:
        assert kernels.backend_name() == "python"
    finally:
        kernels.use_backend(prev)
    assert kernels.backend_name() == prev


def test_unknown_backend():
    with pytest.raises(ValueError):
        kernels.use_backend("fortran")


def test_bilinear_integer_positions_are_exact(backend, rng):
    img = rng.random((8, 9))
    yy, xx = np.meshgrid(np.arange(8.0), np.arange(9.0), indexing="ij")
    np.testing.assert_array_equal(kernels.bilinear_sample(img, yy, xx), img)
