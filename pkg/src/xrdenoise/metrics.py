"""Full-reference image quality metrics: RMSE, PSNR, SSIM, SNR.

Peak intensity is 1.0. PSNR and SNR of identical images are reported as
``INF_DB`` (99 dB) instead of infinity so reports stay numeric.
"""

from __future__ import annotations

import math
from dataclasses import astuple, dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

INF_DB = 99.0


@dataclass(frozen=True)
class SsimConfig:
    window: int = 11
    sigma: float = 1.5
    k1: float = 0.01
    k2: float = 0.03
    data_range: float = 1.0


@dataclass(frozen=True)
class MetricsRecord:
    rmse: float
    psnr: float
    ssim: float
    snr: float

    def as_tuple(self):
        return astuple(self)

    def csv(self):
        return f"{self.rmse:.4f},{self.psnr:.2f},{self.ssim:.4f},{self.snr:.2f}"


def _pair(ref, test):
    a = np.asarray(ref, dtype=np.float64)
    b = np.asarray(test, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return a, b


def rmse(ref, test):
    a, b = _pair(ref, test)
    return math.sqrt(np.mean((b - a) ** 2))


def psnr_from_rmse(err, peak=1.0):
    if err == 0.0:
        return INF_DB
    return 20.0 * math.log10(peak / err)


def psnr(ref, test):
    return psnr_from_rmse(rmse(ref, test))


def snr(ref, test):
    """10 log10 of reference signal energy over error energy."""
    a, b = _pair(ref, test)
    noise = np.sum((a - b) ** 2)
    if noise == 0.0:
        return INF_DB
    return 10.0 * math.log10(np.sum(a * a) / noise)


def gaussian_window(size=11, sigma=1.5):
    """Normalized 1-D Gaussian taps; the 2-D window is its outer product."""
    x = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    g = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return g / g.sum()


def _filter_valid(img, g):
    """Separable 'valid' correlation with the 1-D taps ``g``."""
    rows = sliding_window_view(img, g.size, axis=0) @ g
    return sliding_window_view(rows, g.size, axis=1) @ g


def ssim_map(ref, test, cfg=SsimConfig()):
    a, b = _pair(ref, test)
    if min(a.shape) < cfg.window:
        raise ValueError(f"image {a.shape} smaller than the {cfg.window}x{cfg.window} SSIM window")
    g = gaussian_window(cfg.window, cfg.sigma)
    c1 = (cfg.k1 * cfg.data_range) ** 2
    c2 = (cfg.k2 * cfg.data_range) ** 2
    mu_a = _filter_valid(a, g)
    mu_b = _filter_valid(b, g)
    var_a = _filter_valid(a * a, g) - mu_a * mu_a
    var_b = _filter_valid(b * b, g) - mu_b * mu_b
    cov = _filter_valid(a * b, g) - mu_a * mu_b
    num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)
    den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
    return num / den


def ssim(ref, test, cfg=SsimConfig()):
    """Mean SSIM over every window position that fits inside the image."""
    return float(np.mean(ssim_map(ref, test, cfg)))


def evaluate_all(ref, test):
    return MetricsRecord(rmse(ref, test), psnr(ref, test), ssim(ref, test), snr(ref, test))
