"""Dual-decoder U-Net forward and backward passes.

Public functions take and return batch-major ``(B, C, H, W)`` arrays; the
internals work channel-major (see :mod:`.layers`). The computation dtype
follows the parameters, so a float64 copy of a store gives a float64 pass.
"""

from __future__ import annotations

from collections.abc import Mapping

import numpy as np

from . import layers as L
from .config import DEPTH, Variant
from .store import ParamStore, check_params


def _tensors(params):
    return params.tensors if isinstance(params, ParamStore) else params


def _to_cm(x):
    return np.ascontiguousarray(np.asarray(x).transpose(1, 0, 2, 3))


def _to_bm(x):
    return np.ascontiguousarray(x.transpose(1, 0, 2, 3))


def _check_input(x):
    if x.ndim != 4 or x.shape[1] != 1:
        raise ValueError(f"expected input of shape (B, 1, H, W), got {x.shape}")
    h, w = x.shape[-2:]
    if h % 16 or w % 16 or h == 0 or w == 0:
        raise ValueError(f"spatial size {h}x{w} must be divisible by 16")


# --- building blocks -----------------------------------------------------


def _double_conv(x, p, prefix, keep):
    y, c1 = L.conv_forward(x, p[f"{prefix}.conv1.weight"], p[f"{prefix}.conv1.bias"], keep)
    y, m1 = L.relu_forward(y)
    y, c2 = L.conv_forward(y, p[f"{prefix}.conv2.weight"], p[f"{prefix}.conv2.bias"], keep)
    y, m2 = L.relu_forward(y)
    return y, ((c1, m1, c2, m2) if keep else None)


def _double_conv_backward(d, cache, p, prefix, grads):
    c1, m1, c2, m2 = cache
    d = L.relu_backward(d, m2)
    d, grads[f"{prefix}.conv2.weight"], grads[f"{prefix}.conv2.bias"] = L.conv_backward(
        d, c2, p[f"{prefix}.conv2.weight"]
    )
    d = L.relu_backward(d, m1)
    d, grads[f"{prefix}.conv1.weight"], grads[f"{prefix}.conv1.bias"] = L.conv_backward(
        d, c1, p[f"{prefix}.conv1.weight"]
    )
    return d


def _encode(x, p, keep):
    skips, caches = [], []
    h = x
    for d in range(DEPTH):
        h, dc = _double_conv(h, p, f"enc{d}", keep)
        skips.append(h)
        h, pc = L.maxpool_forward(h, keep)
        caches.append((dc, pc))
    bott, bc = _double_conv(h, p, "bottleneck", keep)
    return skips, bott, (caches, bc)


def _encode_backward(dskips, dbott, cache, p, grads):
    caches, bc = cache
    dh = _double_conv_backward(dbott, bc, p, "bottleneck", grads)
    for d in reversed(range(DEPTH)):
        dc, pc = caches[d]
        dh = L.maxpool_backward(dh, pc) + dskips[d]
        dh = _double_conv_backward(dh, dc, p, f"enc{d}", grads)
    return dh


def _decode(bott, skips, p, head, keep):
    """``skips`` shallow-first (f1..f4); consumed deepest-first."""
    h = bott
    caches = []
    for s in range(DEPTH):
        pre = f"dec_{head}"
        u, uc = L.upconv_forward(h, p[f"{pre}.up{s}.weight"], p[f"{pre}.up{s}.bias"], keep)
        cat = np.concatenate([u, skips[DEPTH - 1 - s]], axis=0)
        h, dc = _double_conv(cat, p, f"{pre}.block{s}", keep)
        caches.append((uc, dc, u.shape[0]))
    out, oc = L.conv_forward(h, p[f"dec_{head}.out.weight"], p[f"dec_{head}.out.bias"], keep)
    return out, (caches, oc)


def _decode_backward(dout, cache, p, head, grads):
    caches, oc = cache
    pre = f"dec_{head}"
    dh, grads[f"{pre}.out.weight"], grads[f"{pre}.out.bias"] = L.conv_backward(
        dout, oc, p[f"{pre}.out.weight"]
    )
    dskips = [None] * DEPTH
    for s in reversed(range(DEPTH)):
        uc, dc, n_up = caches[s]
        dcat = _double_conv_backward(dh, dc, p, f"{pre}.block{s}", grads)
        dskips[DEPTH - 1 - s] = dcat[n_up:]
        dh, grads[f"{pre}.up{s}.weight"], grads[f"{pre}.up{s}.bias"] = L.upconv_backward(
            dcat[:n_up], uc, p[f"{pre}.up{s}.weight"]
        )
    return dh, dskips


def _blend(xd, xe, a):
    """``a * xd + (1 - a) * xe``, written so that xd == xe returns xe exactly."""
    return xe + a * (xd - xe)


def _fuse(xd, xe, p, keep):
    z = np.concatenate([xd, xe], axis=0)
    h, c1 = L.conv_forward(z, p["fusion.conv1.weight"], p["fusion.conv1.bias"], keep)
    h, m1 = L.relu_forward(h)
    logits, c2 = L.conv_forward(h, p["fusion.conv2.weight"], p["fusion.conv2.bias"], keep)
    alpha = L.softmax2(logits)
    out = _blend(xd, xe, alpha[0:1])
    return out, alpha, ((c1, m1, c2, alpha, xd - xe) if keep else None)


def _fuse_backward(dout, cache, p, grads):
    c1, m1, c2, alpha, diff = cache
    a1 = alpha[0:1]
    dxd = dout * a1
    dxe = dout - dxd
    dz1 = dout * diff * a1 * alpha[1:2]
    dlogits = np.concatenate([dz1, -dz1], axis=0)
    dh, grads["fusion.conv2.weight"], grads["fusion.conv2.bias"] = L.conv_backward(
        dlogits, c2, p["fusion.conv2.weight"]
    )
    dh = L.relu_backward(dh, m1)
    dz, grads["fusion.conv1.weight"], grads["fusion.conv1.bias"] = L.conv_backward(
        dh, c1, p["fusion.conv1.weight"]
    )
    return dxd + dz[0:1], dxe + dz[1:2]


def _forward(x, config, p, keep):
    skips, bott, enc_cache = _encode(x, p, keep)
    xd, dd_cache = _decode(bott, skips, p, "denoise", keep)
    tape = {"enc": enc_cache, "denoise": dd_cache}
    variant = config.variant
    if variant is Variant.SINGLE:
        return xd, tape
    eskips = [L.laplacian_enhance(s) for s in skips] if variant.enhanced_skips else skips
    xe, tape["edge"] = _decode(bott, eskips, p, "edge", keep)
    if variant.fused:
        out, _, tape["fusion"] = _fuse(xd, xe, p, keep)
    else:
        out = _blend(xd, xe, 0.5)
    return out, tape


# --- public API ----------------------------------------------------------


def encoder_forward(x, params):
    """Return the four skip features (shallow first) and the bottleneck."""
    x = np.asarray(x)
    _check_input(x)
    p = _tensors(params)
    skips, bott, _ = _encode(_to_cm(x.astype(_dtype(p), copy=False)), p, keep=False)
    return [_to_bm(s) for s in skips], _to_bm(bott)


def laplacian_enhance(f):
    """``f + laplacian(f)`` per channel on a (B, C, H, W) map."""
    f = np.asarray(f)
    return _to_bm(L.laplacian_enhance(_to_cm(f)))


def decoder_forward(bottleneck, skips, params, head):
    """Run one decoder head; ``skips`` deepest-first (f4..f1)."""
    p = _tensors(params)
    cm_skips = [_to_cm(s) for s in reversed(list(skips))]
    for d, s in enumerate(cm_skips):
        expect = bottleneck.shape[-1] * 2 ** (DEPTH - d)
        if s.shape[-1] != expect:
            raise ValueError(f"skip {d} has width {s.shape[-1]}, expected {expect}")
    out, _ = _decode(_to_cm(bottleneck), cm_skips, p, head, keep=False)
    return _to_bm(out)


def fusion_forward(xd, xe, params):
    """Blend two (B, 1, H, W) outputs; returns ``(xhat, alpha)`` with alpha (B, 2, H, W)."""
    xd, xe = np.asarray(xd), np.asarray(xe)
    if xd.shape != xe.shape:
        raise ValueError(f"shape mismatch {xd.shape} vs {xe.shape}")
    out, alpha, _ = _fuse(_to_cm(xd), _to_cm(xe), _tensors(params), keep=False)
    return _to_bm(out), _to_bm(alpha)


def _dtype(p):
    return next(iter(p.values())).dtype


def forward(x, config, params, clamp=True):
    """Denoise a (B, 1, H, W) batch; output clamped to [0, 1] unless ``clamp=False``."""
    x = np.asarray(x)
    _check_input(x)
    p = _tensors(params)
    check_params(config, p)
    out, _ = _forward(_to_cm(x.astype(_dtype(p), copy=False)), config, p, keep=False)
    out = _to_bm(out)
    return np.clip(out, 0.0, 1.0) if clamp else out


def forward_train(x, config, params):
    """Unclamped forward pass that also returns the tape for :func:`backward`."""
    x = np.asarray(x)
    _check_input(x)
    p = _tensors(params)
    out, tape = _forward(_to_cm(x.astype(_dtype(p), copy=False)), config, p, keep=True)
    return _to_bm(out), tape


def backward(dout, tape, config, params):
    """Gradients of every learnable tensor given dLoss/dOutput (B, 1, H, W)."""
    p = _tensors(params)
    grads = {}
    d = _to_cm(dout)
    variant = config.variant
    if variant is Variant.SINGLE:
        dxd, dxe = d, None
    elif variant.fused:
        dxd, dxe = _fuse_backward(d, tape["fusion"], p, grads)
    else:
        dxd, dxe = 0.5 * d, d - 0.5 * d
    dbott, dskips = _decode_backward(dxd, tape["denoise"], p, "denoise", grads)
    if dxe is not None:
        db2, dsk2 = _decode_backward(dxe, tape["edge"], p, "edge", grads)
        dbott = dbott + db2
        if variant.enhanced_skips:
            dsk2 = [L.laplacian_enhance_backward(g) for g in dsk2]
        dskips = [a + b for a, b in zip(dskips, dsk2)]
    _encode_backward(dskips, dbott, tape["enc"], p, grads)
    return {name: grads[name] for name in p}
