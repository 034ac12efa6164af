"""Pure-numpy reference implementations of the hot kernels.

Every function here has a numba twin in ``numba_impl``; the test suite
checks the two against each other. This path is selected with
``DUCA_BACKEND=numpy`` and is the fallback when numba is unavailable.
"""

import numpy as np

NAME = "numpy"


def im2col(x, kh, kw, stride, pad):
    """Unfold conv patches: (N,C,H,W) -> (N, OH*OW, C*kh*kw), zero padding."""
    n, c, h, w = x.shape
    oh = (h + 2 * pad - kh) // stride + 1
    ow = (w + 2 * pad - kw) // stride + 1
    if pad > 0:
        xp = np.zeros((n, c, h + 2 * pad, w + 2 * pad), dtype=x.dtype)
        xp[:, :, pad:pad + h, pad:pad + w] = x
    else:
        xp = x
    cols = np.empty((n, c, kh, kw, oh, ow), dtype=x.dtype)
    for ky in range(kh):
        ye = ky + stride * (oh - 1) + 1
        for kx in range(kw):
            xe = kx + stride * (ow - 1) + 1
            cols[:, :, ky, kx] = xp[:, :, ky:ye:stride, kx:xe:stride]
    return cols.transpose(0, 4, 5, 1, 2, 3).reshape(n, oh * ow, c * kh * kw)


def col2im(cols, x_shape, kh, kw, stride, pad):
    """Adjoint of im2col: scatter-add patch gradients back to (N,C,H,W)."""
    n, c, h, w = x_shape
    oh = (h + 2 * pad - kh) // stride + 1
    ow = (w + 2 * pad - kw) // stride + 1
    colsr = cols.reshape(n, oh, ow, c, kh, kw).transpose(0, 3, 4, 5, 1, 2)
    dxp = np.zeros((n, c, h + 2 * pad, w + 2 * pad), dtype=cols.dtype)
    for ky in range(kh):
        ye = ky + stride * (oh - 1) + 1
        for kx in range(kw):
            xe = kx + stride * (ow - 1) + 1
            dxp[:, :, ky:ye:stride, kx:xe:stride] += colsr[:, :, ky, kx]
    if pad > 0:
        return dxp[:, :, pad:pad + h, pad:pad + w]
    return dxp


def maxpool2x2(x):
    """2x2/stride-2 max pool; odd trailing rows/cols are dropped.

    Returns (out, idx) with idx in {0,1,2,3} encoding the argmax corner,
    so the backward pass routes gradient to a single winner per window.
    """
    n, c, h, w = x.shape
    oh, ow = h // 2, w // 2
    xe = x[:, :, :oh * 2, :ow * 2]
    windows = xe.reshape(n, c, oh, 2, ow, 2).transpose(0, 1, 2, 4, 3, 5)
    windows = windows.reshape(n, c, oh, ow, 4)
    idx = windows.argmax(axis=4).astype(np.uint8)
    out = np.take_along_axis(windows, idx[..., None].astype(np.intp), axis=4)[..., 0]
    return out, idx


def maxpool2x2_backward(dout, idx, x_shape):
    """Scatter pooled gradients back to the argmax positions."""
    n, c, h, w = x_shape
    oh, ow = h // 2, w // 2
    dwin = np.zeros((n, c, oh, ow, 4), dtype=dout.dtype)
    np.put_along_axis(dwin, idx[..., None].astype(np.intp), dout[..., None], axis=4)
    dx = np.zeros(x_shape, dtype=dout.dtype)
    dxe = dwin.reshape(n, c, oh, ow, 2, 2).transpose(0, 1, 2, 4, 3, 5)
    dx[:, :, :oh * 2, :ow * 2] = dxe.reshape(n, c, oh * 2, ow * 2)
    return dx


def bilinear_resize(x, oh, ow):
    """Bilinear resize (N,C,H,W) -> (N,C,oh,ow), half-pixel-centre convention."""
    n, c, h, w = x.shape
    sy = h / oh
    sx = w / ow
    fy = np.clip((np.arange(oh, dtype=np.float64) + 0.5) * sy - 0.5, 0, h - 1)
    fx = np.clip((np.arange(ow, dtype=np.float64) + 0.5) * sx - 0.5, 0, w - 1)
    y0 = np.floor(fy).astype(np.intp)
    x0 = np.floor(fx).astype(np.intp)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    wy = (fy - y0).astype(x.dtype)
    wx = (fx - x0).astype(x.dtype)
    wy = wy[:, None]
    wx = wx[None, :]
    a = x[:, :, y0[:, None], x0[None, :]]
    b = x[:, :, y0[:, None], x1[None, :]]
    d = x[:, :, y1[:, None], x0[None, :]]
    e = x[:, :, y1[:, None], x1[None, :]]
    # lerp form keeps constant inputs exactly constant
    top = a + wx * (b - a)
    bot = d + wx * (e - d)
    return top + wy * (bot - top)


def correlate3(img, k):
    """3x3 cross-correlation on single-channel batches (N,H,W), reflect padding."""
    xp = np.pad(img, ((0, 0), (1, 1), (1, 1)), mode="reflect")
    n, h, w = img.shape
    out = np.zeros_like(img)
    for ky in range(3):
        for kx in range(3):
            out += k[ky, kx] * xp[:, ky:ky + h, kx:kx + w]
    return out
