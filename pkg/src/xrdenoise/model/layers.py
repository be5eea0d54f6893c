"""Forward/backward primitives over channel-major ``(C, B, H, W)`` arrays.

Keeping channels outermost turns every convolution into one GEMM over the
whole batch and makes channel concatenation a cheap axis-0 stack. Each
``*_forward`` returns ``(output, cache)``; the matching ``*_backward``
consumes the cache.
"""

import numpy as np

LAPLACIAN_STENCIL = np.array([[-1, -1, -1], [-1, 8, -1], [-1, -1, -1]], dtype=np.float64)


def im2col(xp, k, out_h, out_w):
    """(C, B, Hp, Wp) padded input -> (C*k*k, B*out_h*out_w) patch matrix."""
    c, b = xp.shape[:2]
    cols = np.empty((c, k, k, b, out_h, out_w), dtype=xp.dtype)
    for i in range(k):
        for j in range(k):
            cols[:, i, j] = xp[:, :, i : i + out_h, j : j + out_w]
    return cols.reshape(c * k * k, b * out_h * out_w)


def col2im(cols, c, b, k, out_h, out_w):
    """Adjoint of :func:`im2col`."""
    cols = cols.reshape(c, k, k, b, out_h, out_w)
    xp = np.zeros((c, b, out_h + k - 1, out_w + k - 1), dtype=cols.dtype)
    for i in range(k):
        for j in range(k):
            xp[:, :, i : i + out_h, j : j + out_w] += cols[:, i, j]
    return xp


def conv_forward(x, w, bias, keep=True):
    """Stride-1 'same' convolution (zero padding ``k // 2``)."""
    c, b, h, wd = x.shape
    o, _, k, _ = w.shape
    if k == 1:
        cols = x.reshape(c, b * h * wd)
    else:
        p = k // 2
        xp = np.pad(x, ((0, 0), (0, 0), (p, p), (p, p)))
        cols = im2col(xp, k, h, wd)
    y = w.reshape(o, -1) @ cols
    y += bias[:, None]
    return y.reshape(o, b, h, wd), ((cols, x.shape) if keep else None)


def conv_backward(dy, cache, w):
    cols, xshape = cache
    c, b, h, wd = xshape
    o, _, k, _ = w.shape
    dy2 = dy.reshape(o, -1)
    dw = (dy2 @ cols.T).reshape(w.shape)
    db = dy2.sum(axis=1)
    dcols = w.reshape(o, -1).T @ dy2
    if k == 1:
        return dcols.reshape(xshape), dw, db
    p = k // 2
    dxp = col2im(dcols, c, b, k, h, wd)
    return dxp[:, :, p:-p, p:-p], dw, db


def upconv_forward(x, w, bias, keep=True):
    """2x2 transposed convolution, stride 2. ``w`` is (C_in, C_out, 2, 2)."""
    c, b, h, wd = x.shape
    o = w.shape[1]
    x2 = x.reshape(c, -1)
    y = w.reshape(c, o * 4).T @ x2  # (o*2*2, B*H*W)
    y = y.reshape(o, 2, 2, b, h, wd).transpose(0, 3, 4, 1, 5, 2).reshape(o, b, 2 * h, 2 * wd)
    y = y + bias[:, None, None, None]
    return y, ((x2, x.shape) if keep else None)


def upconv_backward(dy, cache, w):
    x2, xshape = cache
    c, b, h, wd = xshape
    o = w.shape[1]
    dy6 = dy.reshape(o, b, h, 2, wd, 2).transpose(0, 3, 5, 1, 2, 4).reshape(o * 4, -1)
    dw = (x2 @ dy6.T).reshape(w.shape)
    db = dy.sum(axis=(1, 2, 3))
    dx = (w.reshape(c, o * 4) @ dy6).reshape(xshape)
    return dx, dw, db


def relu_forward(x):
    y = np.maximum(x, 0)
    return y, y > 0


def relu_backward(dy, mask):
    return dy * mask


def maxpool_forward(x, keep=True):
    """2x2 max pooling, stride 2; ties route the gradient to the first maximum."""
    c, b, h, w = x.shape
    win = x.reshape(c, b, h // 2, 2, w // 2, 2).transpose(0, 1, 2, 4, 3, 5)
    win = win.reshape(c, b, h // 2, w // 2, 4)
    idx = win.argmax(axis=-1)
    y = np.take_along_axis(win, idx[..., None], axis=-1)[..., 0]
    return y, ((idx, x.shape) if keep else None)


def maxpool_backward(dy, cache):
    idx, xshape = cache
    c, b, h, w = xshape
    dwin = np.zeros((c, b, h // 2, w // 2, 4), dtype=dy.dtype)
    np.put_along_axis(dwin, idx[..., None], dy[..., None], axis=-1)
    dwin = dwin.reshape(c, b, h // 2, w // 2, 2, 2).transpose(0, 1, 2, 4, 3, 5)
    return dwin.reshape(xshape)


def laplacian(x):
    """Per-channel 3x3 Laplacian stencil, no channel mixing.

    Borders replicate the edge pixel, so a spatially constant map has zero
    response everywhere, borders included.
    """
    xp = np.pad(x, ((0, 0), (0, 0), (1, 1), (1, 1)), mode="edge")
    h, w = x.shape[-2:]
    # sum of (centre - neighbour) terms: exactly zero on flat regions
    out = np.zeros_like(x)
    for i in range(3):
        for j in range(3):
            if i == 1 and j == 1:
                continue
            out += x - xp[:, :, i : i + h, j : j + w]
    return out


def laplacian_adjoint(g):
    """Transpose of :func:`laplacian` (the edge padding makes it non-symmetric)."""
    h, w = g.shape[-2:]
    gp = np.zeros(g.shape[:-2] + (h + 2, w + 2), dtype=g.dtype)
    for i in range(3):
        for j in range(3):
            if i == 1 and j == 1:
                continue
            gp[:, :, i : i + h, j : j + w] += g
    # fold the replicated border back onto the pixels it copied
    inner = gp[:, :, 1:-1, 1:-1].copy()
    inner[:, :, 0, :] += gp[:, :, 0, 1:-1]
    inner[:, :, -1, :] += gp[:, :, -1, 1:-1]
    inner[:, :, :, 0] += gp[:, :, 1:-1, 0]
    inner[:, :, :, -1] += gp[:, :, 1:-1, -1]
    inner[:, :, 0, 0] += gp[:, :, 0, 0]
    inner[:, :, 0, -1] += gp[:, :, 0, -1]
    inner[:, :, -1, 0] += gp[:, :, -1, 0]
    inner[:, :, -1, -1] += gp[:, :, -1, -1]
    return 8 * g - inner


def laplacian_enhance(x):
    """Skip enhancement ``x + laplacian(x)``."""
    return x + laplacian(x)


def laplacian_enhance_backward(dy):
    return dy + laplacian_adjoint(dy)


def softmax2(z):
    """Softmax over axis 0 of a 2-channel logit map."""
    m = np.maximum(z[0], z[1])
    e = np.exp(z - m)
    return e / (e[0] + e[1])
