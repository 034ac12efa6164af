"""Shape transform: algebraic cases plus a step-by-step float64 oracle."""

import numpy as np
import pytest

from duca.errors import ConfigurationError, StructuralError
from duca.shape_filter import GAUSS_3, SOBEL_X, SOBEL_Y, ShapeConfig, extract_shape


def _reflect(i, n):
    if i < 0:
        return -i
    if i > n - 1:
        return 2 * (n - 1) - i
    return i


def _conv_reflect(img, k):
    h, w = img.shape
    out = np.zeros_like(img)
    for i in range(h):
        for j in range(w):
            acc = 0.0
            for ky in range(3):
                for kx in range(3):
                    acc += k[ky, kx] * img[_reflect(i + ky - 1, h), _reflect(j + kx - 1, w)]
            out[i, j] = acc
    return out


def _bilinear(img, oh, ow):
    h, w = img.shape
    out = np.zeros((oh, ow))
    for i in range(oh):
        fy = min(max((i + 0.5) * h / oh - 0.5, 0.0), h - 1)
        y0 = int(np.floor(fy))
        y1 = min(y0 + 1, h - 1)
        wy = fy - y0
        for j in range(ow):
            fx = min(max((j + 0.5) * w / ow - 0.5, 0.0), w - 1)
            x0 = int(np.floor(fx))
            x1 = min(x0 + 1, w - 1)
            wx = fx - x0
            top = img[y0, x0] * (1 - wx) + img[y0, x1] * wx
            bot = img[y1, x0] * (1 - wx) + img[y1, x1] * wx
            out[i, j] = top * (1 - wy) + bot * wy
    return out


def _oracle_pipeline(rgb):
    """Independent float64 walk through the full transform on one image."""
    gray = 0.299 * rgb[0] + 0.587 * rgb[1] + 0.114 * rgb[2]
    h, w = gray.shape
    up = _bilinear(gray, 2 * h, 2 * w)
    blurred = _conv_reflect(up, GAUSS_3)
    dx = _conv_reflect(blurred, SOBEL_X)
    dy = _conv_reflect(blurred, SOBEL_Y)
    mag = np.sqrt(dx * dx + dy * dy)
    mag = _bilinear(mag, h, w)
    peak = mag.max()
    if peak > 0:
        mag = mag / peak
    return mag


def test_constant_image_gives_zero_output():
    # rounding in the Sobel accumulation leaves ~1e-17 residue; the
    # normalization floor keeps it from being amplified past ~1e-11
    x = np.full((2, 3, 8, 8), 0.5)
    out = extract_shape(x)
    assert out.shape == (2, 3, 8, 8)
    assert np.allclose(out, 0.0, atol=1e-5)
    assert out.max() < 1e-9


def test_horizontal_stripes_have_zero_x_gradient():
    # column-constant image: the x-Sobel response is exactly zero
    rows = (np.arange(8) % 2).astype(np.float64)
    img = np.broadcast_to(rows[:, None], (8, 8))
    up = _bilinear(img, 16, 16)
    blurred = _conv_reflect(up, GAUSS_3)
    dx = _conv_reflect(blurred, SOBEL_X)
    dy = _conv_reflect(blurred, SOBEL_Y)
    assert np.abs(dx).max() < 1e-12
    assert np.abs(dy).max() > 0.1
    out = extract_shape(np.broadcast_to(img, (1, 3, 8, 8)))
    assert out.max() == pytest.approx(1.0)


def test_step_edge_matches_bruteforce_oracle():
    rgb = np.zeros((3, 8, 8))
    rgb[:, :, 4:] = 1.0
    expected = _oracle_pipeline(rgb)
    got = extract_shape(rgb[None], ShapeConfig(output_channels=1))[0, 0]
    assert np.allclose(got, expected, atol=1e-10)


def test_random_image_matches_bruteforce_oracle():
    rng = np.random.default_rng(23)
    rgb = rng.random((3, 9, 7))
    expected = _oracle_pipeline(rgb)
    got = extract_shape(rgb[None], ShapeConfig(output_channels=1))[0, 0]
    assert np.allclose(got, expected, atol=1e-10)


def test_output_shape_and_channel_replication():
    rng = np.random.default_rng(1)
    x = rng.random((4, 3, 11, 13), dtype=np.float32)
    out3 = extract_shape(x)
    assert out3.shape == (4, 3, 11, 13)
    assert np.array_equal(out3[:, 0], out3[:, 1])
    assert np.array_equal(out3[:, 0], out3[:, 2])
    out1 = extract_shape(x, ShapeConfig(output_channels=1))
    assert out1.shape == (4, 1, 11, 13)
    assert (out1 >= 0).all()


def test_constant_offset_invariance():
    rng = np.random.default_rng(2)
    x = rng.random((2, 3, 12, 12)) * 0.5
    a = extract_shape(x)
    b = extract_shape(x + 0.3)
    assert np.allclose(a, b, atol=1e-5)


def test_horizontal_flip_equivariance():
    rng = np.random.default_rng(3)
    x = rng.random((2, 3, 16, 16))
    flipped = x[:, :, :, ::-1].copy()
    a = extract_shape(flipped)
    b = extract_shape(x)[:, :, :, ::-1]
    assert np.allclose(a, b, atol=1e-5)


def test_grayscale_input_accepted():
    rng = np.random.default_rng(4)
    x = rng.random((2, 1, 10, 10))
    out = extract_shape(x, ShapeConfig(output_channels=1))
    assert out.shape == (2, 1, 10, 10)


def test_deterministic_and_nondestructive():
    rng = np.random.default_rng(5)
    x = rng.random((2, 3, 8, 8))
    keep = x.copy()
    a = extract_shape(x)
    b = extract_shape(x)
    assert np.array_equal(a, b)
    assert np.array_equal(x, keep)


def test_bad_inputs_rejected():
    with pytest.raises(StructuralError):
        extract_shape(np.zeros((4, 2, 8, 8)))
    with pytest.raises(StructuralError):
        extract_shape(np.zeros((1, 3, 2, 8)))
    with pytest.raises(StructuralError):
        extract_shape(np.full((1, 3, 8, 8), np.nan))
    with pytest.raises(ConfigurationError):
        ShapeConfig(gaussian_kernel_size=4)
    with pytest.raises(ConfigurationError):
        ShapeConfig(upsample_factor=0)
