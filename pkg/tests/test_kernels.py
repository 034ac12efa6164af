"""Backend parity and brute-force oracles for the hot kernels."""

import numpy as np
import pytest

from duca.kernels import numba_impl, numpy_impl

BACKENDS = [numpy_impl, numba_impl]


def _brute_im2col(x, kh, kw, stride, pad):
    n, c, h, w = x.shape
    oh = (h + 2 * pad - kh) // stride + 1
    ow = (w + 2 * pad - kw) // stride + 1
    out = np.zeros((n, oh * ow, c * kh * kw), dtype=x.dtype)
    for b in range(n):
        for i in range(oh):
            for j in range(ow):
                col = 0
                for ch in range(c):
                    for ky in range(kh):
                        for kx in range(kw):
                            yy = i * stride + ky - pad
                            xx = j * stride + kx - pad
                            if 0 <= yy < h and 0 <= xx < w:
                                out[b, i * ow + j, col] = x[b, ch, yy, xx]
                            col += 1
    return out


@pytest.mark.parametrize("impl", BACKENDS, ids=lambda m: m.NAME)
@pytest.mark.parametrize("kh,stride,pad", [(3, 1, 1), (3, 2, 1), (1, 1, 0), (1, 2, 0)])
def test_im2col_matches_bruteforce(impl, kh, stride, pad):
    rng = np.random.default_rng(7)
    x = rng.random((2, 3, 9, 8), dtype=np.float32)
    assert np.array_equal(impl.im2col(x, kh, kh, stride, pad),
                          _brute_im2col(x, kh, kh, stride, pad))


@pytest.mark.parametrize("kh,stride,pad", [(3, 1, 1), (3, 2, 1), (1, 2, 0)])
def test_col2im_is_im2col_adjoint(kh, stride, pad):
    # <im2col(x), g> == <x, col2im(g)> characterizes the adjoint exactly
    rng = np.random.default_rng(3)
    x = rng.random((2, 3, 8, 8)).astype(np.float64)
    for impl in BACKENDS:
        cols = impl.im2col(x, kh, kh, stride, pad)
        g = rng.random(cols.shape)
        lhs = float((cols * g).sum())
        rhs = float((x * impl.col2im(g, x.shape, kh, kh, stride, pad)).sum())
        assert abs(lhs - rhs) < 1e-9 * max(1.0, abs(lhs))


@pytest.mark.parametrize("shape", [(2, 4, 8, 8), (3, 2, 7, 9)])
def test_maxpool_backends_agree_and_route_single_winner(shape):
    rng = np.random.default_rng(11)
    x = rng.random(shape, dtype=np.float32)
    o1, i1 = numpy_impl.maxpool2x2(x)
    o2, i2 = numba_impl.maxpool2x2(x)
    assert np.array_equal(o1, o2)
    assert np.array_equal(i1, i2)
    dout = np.ones_like(o1)
    for impl, idx in [(numpy_impl, i1), (numba_impl, i2)]:
        dx = impl.maxpool2x2_backward(dout, idx, x.shape)
        # every window distributes exactly one unit of gradient
        assert dx.sum() == o1.size
        assert ((dx == 0) | (dx == 1)).all()


def test_maxpool_ties_pick_first_in_window():
    x = np.full((1, 1, 2, 2), 0.5, dtype=np.float32)
    for impl in BACKENDS:
        _, idx = impl.maxpool2x2(x)
        assert idx[0, 0, 0, 0] == 0


def test_bilinear_resize_identity_and_parity():
    rng = np.random.default_rng(5)
    x = rng.random((2, 3, 13, 17), dtype=np.float32)
    for impl in BACKENDS:
        assert np.allclose(impl.bilinear_resize(x, 13, 17), x, atol=1e-6)
    up_np = numpy_impl.bilinear_resize(x, 26, 34)
    up_nb = numba_impl.bilinear_resize(x, 26, 34)
    assert np.allclose(up_np, up_nb, atol=1e-5)


def test_bilinear_resize_preserves_constants():
    x = np.full((1, 1, 8, 8), 0.37, dtype=np.float64)
    for impl in BACKENDS:
        assert np.allclose(impl.bilinear_resize(x, 16, 16), 0.37, atol=1e-12)
        assert np.allclose(impl.bilinear_resize(x, 5, 3), 0.37, atol=1e-12)


def _brute_correlate3(img, k):
    n, h, w = img.shape
    out = np.zeros_like(img)
    for b in range(n):
        for i in range(h):
            for j in range(w):
                acc = 0.0
                for ky in range(3):
                    for kx in range(3):
                        yy = i + ky - 1
                        xx = j + kx - 1
                        if yy < 0:
                            yy = -yy
                        if yy > h - 1:
                            yy = 2 * (h - 1) - yy
                        if xx < 0:
                            xx = -xx
                        if xx > w - 1:
                            xx = 2 * (w - 1) - xx
                        acc += k[ky, kx] * img[b, yy, xx]
                out[b, i, j] = acc
    return out


@pytest.mark.parametrize("impl", BACKENDS, ids=lambda m: m.NAME)
def test_correlate3_matches_bruteforce_with_reflection(impl):
    rng = np.random.default_rng(13)
    img = rng.random((2, 6, 7)).astype(np.float64)
    k = rng.random((3, 3))
    assert np.allclose(impl.correlate3(img, k), _brute_correlate3(img, k), atol=1e-12)
