"""Pure-Python/numpy implementations of the hot kernels.

Every function here has a compiled twin in ``_ckernels.pyx`` that must
return bit-identical results; :mod:`xrdenoise.kernels` picks one at import.
"""

import math

import numpy as np

# Below this rate the Poisson sampler inverts the CDF by sequential search;
# at or above it, transformed rejection with squeeze (PTRS) is used.
INVERSION_CUTOFF = 30.0

_LOGGAM_COEF = (
    8.333333333333333e-02,
    -2.777777777777778e-03,
    7.936507936507937e-04,
    -5.952380952380952e-04,
    8.417508417508418e-04,
    -1.917526917526918e-03,
    6.410256410256410e-03,
    -2.955065359477124e-02,
    1.796443723688307e-01,
    -1.39243221690590e00,
)
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


def loggam(x):
    """log Gamma(x) for x >= 1 from a Stirling series with upward shift.

    Written with plain arithmetic and ``log`` only so the compiled and
    Python samplers agree bit for bit.
    """
    if x == 1.0 or x == 2.0:
        return 0.0
    x0 = x
    n = 0
    if x < 7.0:
        n = int(7.0 - x)
        x0 = x + n
    x2 = 1.0 / (x0 * x0)
    gl0 = _LOGGAM_COEF[9]
    for k in range(8, -1, -1):
        gl0 = gl0 * x2
        gl0 = gl0 + _LOGGAM_COEF[k]
    gl = gl0 / x0 + _HALF_LOG_2PI + (x0 - 0.5) * math.log(x0) - x0
    for _ in range(n):
        x0 = x0 - 1.0
        gl = gl - math.log(x0)
    return gl


def _poisson_inversion(lam, random):
    enlam = math.exp(-lam)
    while True:
        u = random()
        k = 0
        p = enlam
        cdf = p
        while u > cdf:
            k += 1
            p = p * lam / k
            if p == 0.0:
                break
            cdf = cdf + p
        else:
            return k
        # Tail underflowed before the CDF reached u (roundoff); redraw.


def _poisson_ptrs(lam, random):
    slam = math.sqrt(lam)
    loglam = math.log(lam)
    b = 0.931 + 2.53 * slam
    a = -0.059 + 0.02483 * b
    invalpha = 1.1239 + 1.1328 / (b - 3.4)
    vr = 0.9277 - 3.6224 / (b - 2.0)
    while True:
        u = random() - 0.5
        v = random()
        us = 0.5 - abs(u)
        k = math.floor((2.0 * a / us + b) * u + lam + 0.43)
        if us >= 0.07 and v <= vr:
            return k
        if k < 0 or (us < 0.013 and v > us):
            continue
        lhs = math.log(v) + math.log(invalpha) - math.log(a / (us * us) + b)
        rhs = -lam + k * loglam - loggam(k + 1.0)
        if lhs <= rhs:
            return k


def poisson_scalar(lam, gen):
    """One exact Poisson variate drawn from ``gen``'s uniform stream."""
    if lam == 0.0:
        return 0
    if lam < INVERSION_CUTOFF:
        return _poisson_inversion(lam, gen.random)
    return _poisson_ptrs(lam, gen.random)


def poisson_array(lam, gen):
    lam = np.ascontiguousarray(lam, dtype=np.float64)
    flat = lam.ravel()
    out = np.empty(flat.shape[0], dtype=np.int64)
    random = gen.random
    for i in range(flat.shape[0]):
        r = flat[i]
        if r == 0.0:
            out[i] = 0
        elif r < INVERSION_CUTOFF:
            out[i] = _poisson_inversion(r, random)
        else:
            out[i] = _poisson_ptrs(r, random)
    return out.reshape(lam.shape)


def bilinear_sample(img, ys, xs, fill):
    """Sample ``img`` at fractional (row, col) positions; outside pixels = fill."""
    img = np.ascontiguousarray(img, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    xs = np.asarray(xs, dtype=np.float64)
    h, w = img.shape
    y0f = np.floor(ys)
    x0f = np.floor(xs)
    fy = ys - y0f
    fx = xs - x0f
    y0 = y0f.astype(np.int64)
    x0 = x0f.astype(np.int64)

    def tap(yi, xi):
        inside = (yi >= 0) & (yi < h) & (xi >= 0) & (xi < w)
        vals = np.full(ys.shape, fill, dtype=np.float64)
        vals[inside] = img[yi[inside], xi[inside]]
        return vals

    v00 = tap(y0, x0)
    v01 = tap(y0, x0 + 1)
    v10 = tap(y0 + 1, x0)
    v11 = tap(y0 + 1, x0 + 1)
    top = v00 * (1.0 - fx) + v01 * fx
    bot = v10 * (1.0 - fx) + v11 * fx
    return top * (1.0 - fy) + bot * fy
