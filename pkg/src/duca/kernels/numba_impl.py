"""Numba-jitted implementations of the hot kernels.

Same contracts as ``numpy_impl``; selected by default when numba imports
(``DUCA_BACKEND=auto``/``numba``). Wrappers allocate outputs in Python so
the jitted bodies stay dtype-generic.
"""

import numpy as np
from numba import njit, prange

NAME = "numba"


@njit(cache=True, parallel=True)
def _im2col_fill(x, out, kh, kw, stride, pad, oh, ow):
    n, c, h, w = x.shape
    for b in prange(n):
        for i in range(oh):
            for j in range(ow):
                r = i * ow + j
                col = 0
                for ch in range(c):
                    for ky in range(kh):
                        yy = i * stride + ky - pad
                        for kx in range(kw):
                            xx = j * stride + kx - pad
                            v = 0.0
                            if 0 <= yy < h and 0 <= xx < w:
                                v = x[b, ch, yy, xx]
                            out[b, r, col] = v
                            col += 1


def im2col(x, kh, kw, stride, pad):
    n, c, h, w = x.shape
    oh = (h + 2 * pad - kh) // stride + 1
    ow = (w + 2 * pad - kw) // stride + 1
    out = np.empty((n, oh * ow, c * kh * kw), dtype=x.dtype)
    _im2col_fill(x, out, kh, kw, stride, pad, oh, ow)
    return out


@njit(cache=True, parallel=True)
def _col2im_fill(cols, dx, kh, kw, stride, pad, oh, ow):
    n, c, h, w = dx.shape
    for b in prange(n):
        for i in range(oh):
            for j in range(ow):
                r = i * ow + j
                col = 0
                for ch in range(c):
                    for ky in range(kh):
                        yy = i * stride + ky - pad
                        for kx in range(kw):
                            xx = j * stride + kx - pad
                            if 0 <= yy < h and 0 <= xx < w:
                                dx[b, ch, yy, xx] += cols[b, r, col]
                            col += 1


def col2im(cols, x_shape, kh, kw, stride, pad):
    n, c, h, w = x_shape
    oh = (h + 2 * pad - kh) // stride + 1
    ow = (w + 2 * pad - kw) // stride + 1
    dx = np.zeros(x_shape, dtype=cols.dtype)
    _col2im_fill(cols, dx, kh, kw, stride, pad, oh, ow)
    return dx


@njit(cache=True, parallel=True)
def _maxpool_fill(x, out, idx):
    n, c, oh, ow = out.shape
    for b in prange(n):
        for ch in range(c):
            for i in range(oh):
                for j in range(ow):
                    # first-winner tie break, window scanned row-major
                    best = x[b, ch, 2 * i, 2 * j]
                    arg = 0
                    for pos in range(1, 4):
                        v = x[b, ch, 2 * i + pos // 2, 2 * j + pos % 2]
                        if v > best:
                            best = v
                            arg = pos
                    out[b, ch, i, j] = best
                    idx[b, ch, i, j] = arg


def maxpool2x2(x):
    n, c, h, w = x.shape
    oh, ow = h // 2, w // 2
    out = np.empty((n, c, oh, ow), dtype=x.dtype)
    idx = np.empty((n, c, oh, ow), dtype=np.uint8)
    _maxpool_fill(x, out, idx)
    return out, idx


@njit(cache=True, parallel=True)
def _maxpool_bwd_fill(dout, idx, dx):
    n, c, oh, ow = dout.shape
    for b in prange(n):
        for ch in range(c):
            for i in range(oh):
                for j in range(ow):
                    pos = idx[b, ch, i, j]
                    dx[b, ch, 2 * i + pos // 2, 2 * j + pos % 2] = dout[b, ch, i, j]


def maxpool2x2_backward(dout, idx, x_shape):
    dx = np.zeros(x_shape, dtype=dout.dtype)
    _maxpool_bwd_fill(dout, idx, dx)
    return dx


@njit(cache=True, parallel=True)
def _bilinear_fill(x, out, sy, sx):
    n, c, h, w = x.shape
    _, _, oh, ow = out.shape
    for b in prange(n):
        for i in range(oh):
            fy = (i + 0.5) * sy - 0.5
            if fy < 0.0:
                fy = 0.0
            if fy > h - 1:
                fy = h - 1
            y0 = int(np.floor(fy))
            y1 = min(y0 + 1, h - 1)
            wy = fy - y0
            for j in range(ow):
                fx = (j + 0.5) * sx - 0.5
                if fx < 0.0:
                    fx = 0.0
                if fx > w - 1:
                    fx = w - 1
                x0 = int(np.floor(fx))
                x1 = min(x0 + 1, w - 1)
                wx = fx - x0
                for ch in range(c):
                    # lerp form keeps constant inputs exactly constant
                    top = x[b, ch, y0, x0] + wx * (x[b, ch, y0, x1] - x[b, ch, y0, x0])
                    bot = x[b, ch, y1, x0] + wx * (x[b, ch, y1, x1] - x[b, ch, y1, x0])
                    out[b, ch, i, j] = top + wy * (bot - top)


def bilinear_resize(x, oh, ow):
    n, c, h, w = x.shape
    out = np.empty((n, c, oh, ow), dtype=x.dtype)
    _bilinear_fill(x, out, h / oh, w / ow)
    return out


@njit(cache=True, parallel=True)
def _correlate3_fill(img, k, out):
    n, h, w = img.shape
    for b in prange(n):
        for i in range(h):
            for j in range(w):
                acc = 0.0
                for ky in range(3):
                    yy = i + ky - 1
                    if yy < 0:
                        yy = -yy
                    elif yy > h - 1:
                        yy = 2 * (h - 1) - yy
                    for kx in range(3):
                        xx = j + kx - 1
                        if xx < 0:
                            xx = -xx
                        elif xx > w - 1:
                            xx = 2 * (w - 1) - xx
                        acc += k[ky, kx] * img[b, yy, xx]
                out[b, i, j] = acc


def correlate3(img, k):
    out = np.empty_like(img)
    _correlate3_fill(img, k.astype(img.dtype), out)
    return out
