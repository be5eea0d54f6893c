# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels; bit-identical twins of ``_pykernels``."""

import numpy as np
cimport numpy as cnp
from cpython.pycapsule cimport PyCapsule_GetPointer, PyCapsule_IsValid
from libc.math cimport exp, fabs, floor, log, sqrt
from numpy.random cimport bitgen_t

cnp.import_array()

cdef double INVERSION_CUTOFF = 30.0
cdef double HALF_LOG_2PI = 0.9189385332046727
cdef double[10] LOGGAM_COEF = [
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
]


cdef double _loggam(double x) nogil:
    cdef double x0, x2, gl0, gl
    cdef int n = 0, k
    if x == 1.0 or x == 2.0:
        return 0.0
    x0 = x
    if x < 7.0:
        n = <int>(7.0 - x)
        x0 = x + n
    x2 = 1.0 / (x0 * x0)
    gl0 = LOGGAM_COEF[9]
    for k in range(8, -1, -1):
        gl0 = gl0 * x2
        gl0 = gl0 + LOGGAM_COEF[k]
    gl = gl0 / x0 + HALF_LOG_2PI + (x0 - 0.5) * log(x0) - x0
    for k in range(n):
        x0 = x0 - 1.0
        gl = gl - log(x0)
    return gl


def loggam(double x):
    return _loggam(x)


cdef long _inversion(double lam, bitgen_t *rng) nogil:
    cdef double enlam = exp(-lam)
    cdef double u, p, cdf
    cdef long k
    cdef bint underflow
    while True:
        u = rng.next_double(rng.state)
        k = 0
        p = enlam
        cdf = p
        underflow = False
        while u > cdf:
            k += 1
            p = p * lam / k
            if p == 0.0:
                underflow = True
                break
            cdf = cdf + p
        if not underflow:
            return k


cdef long _ptrs(double lam, bitgen_t *rng) nogil:
    cdef double slam = sqrt(lam)
    cdef double loglam = log(lam)
    cdef double b = 0.931 + 2.53 * slam
    cdef double a = -0.059 + 0.02483 * b
    cdef double invalpha = 1.1239 + 1.1328 / (b - 3.4)
    cdef double vr = 0.9277 - 3.6224 / (b - 2.0)
    cdef double u, v, us, lhs, rhs
    cdef long k
    while True:
        u = rng.next_double(rng.state) - 0.5
        v = rng.next_double(rng.state)
        us = 0.5 - fabs(u)
        k = <long>floor((2.0 * a / us + b) * u + lam + 0.43)
        if us >= 0.07 and v <= vr:
            return k
        if k < 0 or (us < 0.013 and v > us):
            continue
        lhs = log(v) + log(invalpha) - log(a / (us * us) + b)
        rhs = -lam + k * loglam - _loggam(k + 1.0)
        if lhs <= rhs:
            return k


cdef bitgen_t *_bitgen(object gen) except NULL:
    capsule = gen.bit_generator.capsule
    if not PyCapsule_IsValid(capsule, "BitGenerator"):
        raise ValueError("invalid bit generator capsule")
    return <bitgen_t *> PyCapsule_GetPointer(capsule, "BitGenerator")


def poisson_scalar(double lam, object gen):
    cdef bitgen_t *rng = _bitgen(gen)
    cdef long k
    if lam == 0.0:
        return 0
    with gen.bit_generator.lock:
        if lam < INVERSION_CUTOFF:
            k = _inversion(lam, rng)
        else:
            k = _ptrs(lam, rng)
    return k


def poisson_array(lam, object gen):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] flat
    lam = np.ascontiguousarray(lam, dtype=np.float64)
    flat = lam.ravel()
    cdef Py_ssize_t n = flat.shape[0], i
    out = np.empty(n, dtype=np.int64)
    cdef cnp.int64_t[::1] o = out
    cdef double[::1] f = flat
    cdef bitgen_t *rng = _bitgen(gen)
    cdef double r
    with gen.bit_generator.lock, nogil:
        for i in range(n):
            r = f[i]
            if r == 0.0:
                o[i] = 0
            elif r < INVERSION_CUTOFF:
                o[i] = _inversion(r, rng)
            else:
                o[i] = _ptrs(r, rng)
    return out.reshape(lam.shape)


def bilinear_sample(img, ys, xs, double fill):
    img = np.ascontiguousarray(img, dtype=np.float64)
    ys = np.ascontiguousarray(ys, dtype=np.float64)
    xs = np.ascontiguousarray(xs, dtype=np.float64)
    if ys.shape != xs.shape:
        raise ValueError("coordinate arrays differ in shape")
    cdef double[:, ::1] im = img
    cdef double[::1] yv = ys.ravel()
    cdef double[::1] xv = xs.ravel()
    cdef Py_ssize_t n = yv.shape[0], i
    cdef long h = im.shape[0], w = im.shape[1], y0, x0
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    cdef double y, x, y0f, x0f, fy, fx, v00, v01, v10, v11, top, bot
    with nogil:
        for i in range(n):
            y = yv[i]
            x = xv[i]
            y0f = floor(y)
            x0f = floor(x)
            fy = y - y0f
            fx = x - x0f
            y0 = <long>y0f
            x0 = <long>x0f
            v00 = im[y0, x0] if (0 <= y0 < h and 0 <= x0 < w) else fill
            v01 = im[y0, x0 + 1] if (0 <= y0 < h and 0 <= x0 + 1 < w) else fill
            v10 = im[y0 + 1, x0] if (0 <= y0 + 1 < h and 0 <= x0 < w) else fill
            v11 = im[y0 + 1, x0 + 1] if (0 <= y0 + 1 < h and 0 <= x0 + 1 < w) else fill
            top = v00 * (1.0 - fx) + v01 * fx
            bot = v10 * (1.0 - fx) + v11 * fx
            o[i] = top * (1.0 - fy) + bot * fy
    return out.reshape(ys.shape)
