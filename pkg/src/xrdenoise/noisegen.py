"""Poisson-Gaussian low-dose degradation.

    noisy = clamp(Poisson(eta * x) / eta + N(0, (sigma8 / 255)^2), 0, 1)

``sigma8`` is in 8-bit grey levels and is divided by 255 before use: with
images on [0, 1], a unit-scale std of 5..30 would erase the signal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels

ETA_RANGE = (50.0, 300.0)
SIGMA8_RANGE = (5.0, 30.0)
MAX_RATE = 1e6

# (sigma8, eta) evaluation settings, in reporting order.
NOISE_GRID = ((5, 300), (10, 200), (15, 150), (20, 100), (25, 50), (30, 100))


@dataclass(frozen=True)
class NoiseParams:
    eta: float
    sigma8: float

    def __post_init__(self):
        if not (math.isfinite(self.eta) and self.eta > 0):
            raise ValueError(f"eta must be positive, got {self.eta}")
        if not (math.isfinite(self.sigma8) and self.sigma8 >= 0):
            raise ValueError(f"sigma8 must be non-negative, got {self.sigma8}")

    @property
    def sigma(self):
        """Gaussian std on the unit intensity scale."""
        return self.sigma8 / 255.0


def noise_grid():
    return [NoiseParams(eta=float(eta), sigma8=float(s)) for s, eta in NOISE_GRID]


def sample_params(rng):
    """Independent uniform draws of eta and sigma8 over the training ranges."""
    eta = rng.uniform(*ETA_RANGE)
    sigma8 = rng.uniform(*SIGMA8_RANGE)
    return NoiseParams(eta=eta, sigma8=sigma8)


def _check_rate(lam):
    lam = np.asarray(lam, dtype=np.float64)
    if not np.all(np.isfinite(lam)):
        raise ValueError("Poisson rate must be finite")
    if lam.size and (lam.min() < 0 or lam.max() > MAX_RATE):
        raise ValueError(f"Poisson rate must lie in [0, {MAX_RATE:g}]")
    return lam


def poisson_sample(lam, rng):
    """One exact Poisson(lam) variate.

    Sequential-search inversion below rate 30, transformed rejection with
    squeeze at and above it.
    """
    _check_rate(lam)
    return int(kernels.poisson_scalar(float(lam), rng))


def poisson_array(lam, rng):
    """Exact Poisson variates for an array of rates, in C order."""
    return kernels.poisson_array(_check_rate(lam), rng)


def apply_noise(img, params, rng):
    """Degrade a clean image; all Poisson draws precede all Gaussian draws."""
    x = np.asarray(img, dtype=np.float64)
    counts = poisson_array(params.eta * x, rng)
    out = counts / params.eta
    if params.sigma8 > 0:
        out = out + rng.standard_normal(x.shape) * params.sigma
    return np.clip(out, 0.0, 1.0).astype(np.float32)
