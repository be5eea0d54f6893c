"""Backend selection for the hot kernels.

The compiled extension is used when it imports; otherwise the numpy/pure
Python fallback. Both produce identical results for identical inputs, so
the choice only affects speed. :func:`use_backend` switches explicitly
(used by the equivalence tests and the benchmark).
"""

import logging

from . import _pykernels

log = logging.getLogger(__name__)

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None
    log.debug("compiled kernels unavailable, using pure-Python fallback")

_BACKENDS = {"python": _pykernels}
if _ckernels is not None:
    _BACKENDS["compiled"] = _ckernels

_active = _ckernels if _ckernels is not None else _pykernels


def available_backends():
    return sorted(_BACKENDS)


def backend_name():
    return "compiled" if _active is _ckernels and _ckernels is not None else "python"


def use_backend(name):
    """Select ``"compiled"`` or ``"python"``; returns the previous name."""
    global _active
    if name not in _BACKENDS:
        raise ValueError(f"backend {name!r} not available (have {available_backends()})")
    prev = backend_name()
    _active = _BACKENDS[name]
    return prev


def poisson_array(lam, gen):
    """Exact Poisson variates, one per entry of ``lam``, drawn from ``gen``."""
    return _active.poisson_array(lam, gen)


def poisson_scalar(lam, gen):
    return _active.poisson_scalar(lam, gen)


def bilinear_sample(img, ys, xs, fill=0.0):
    """Bilinear lookup of ``img`` at (ys, xs); taps outside the image read ``fill``."""
    return _active.bilinear_sample(img, ys, xs, fill)
