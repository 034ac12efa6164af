"""Edge-magnitude shape transform fed to the inductive-bias learner.

Pipeline per batch: luminance -> 2x bilinear upsample -> 3x3 Gaussian blur
-> Sobel gradients -> magnitude -> bilinear downsample to the input size
-> per-image max normalization. Stateless and deterministic.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ConfigurationError, StructuralError

SOBEL_X = np.array([[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]])
SOBEL_Y = np.array([[-1.0, -2.0, -1.0], [0.0, 0.0, 0.0], [1.0, 2.0, 1.0]])
# normalized binomial kernel, the common discrete 3x3 Gaussian
GAUSS_3 = np.array([[1.0, 2.0, 1.0], [2.0, 4.0, 2.0], [1.0, 2.0, 1.0]]) / 16.0
LUMA = np.array([0.299, 0.587, 0.114])


@dataclass
class ShapeConfig:
    gaussian_kernel_size: int = 3
    upsample_factor: int = 2
    output_channels: int = 3

    def __post_init__(self):
        if self.gaussian_kernel_size % 2 != 1:
            raise ConfigurationError("gaussian_kernel_size must be odd")
        if self.gaussian_kernel_size != 3:
            raise ConfigurationError("only the 3x3 Gaussian is supported")
        if self.upsample_factor < 1:
            raise ConfigurationError("upsample_factor must be >= 1")
        if self.output_channels not in (1, 3):
            raise ConfigurationError("output_channels must be 1 or 3")


def extract_shape(batch, cfg=None):
    """Map an RGB or grayscale batch (N,C,H,W) to shape images (N,C_out,H,W)."""
    cfg = cfg or ShapeConfig()
    batch = np.asarray(batch)
    if batch.ndim != 4 or batch.shape[1] not in (1, 3):
        raise StructuralError(f"expected (N,1|3,H,W) image batch, got {batch.shape}")
    n, c, h, w = batch.shape
    if h < 3 or w < 3:
        raise StructuralError(f"images must be at least 3x3, got {h}x{w}")
    if not np.isfinite(batch).all():
        raise StructuralError("non-finite pixel values")

    if c == 3:
        luma = LUMA.astype(batch.dtype)
        gray = (batch[:, 0] * luma[0] + batch[:, 1] * luma[1] + batch[:, 2] * luma[2])
    else:
        gray = batch[:, 0]

    f = cfg.upsample_factor
    if f > 1:
        up = kernels.bilinear_resize(gray[:, None], h * f, w * f)[:, 0]
    else:
        up = gray
    blurred = kernels.correlate3(up, GAUSS_3.astype(batch.dtype))
    dx = kernels.correlate3(blurred, SOBEL_X.astype(batch.dtype))
    dy = kernels.correlate3(blurred, SOBEL_Y.astype(batch.dtype))
    mag = np.sqrt(dx * dx + dy * dy)
    if f > 1:
        mag = kernels.bilinear_resize(mag[:, None], h, w)[:, 0]

    # per-image max normalization; the floor keeps featureless images at
    # zero instead of amplifying numerical noise to full scale
    peak = mag.reshape(n, -1).max(axis=1)
    scale = 1.0 / np.maximum(peak, np.asarray(1e-6, dtype=batch.dtype))
    mag = mag * scale[:, None, None]

    out = mag[:, None]
    if cfg.output_channels == 3:
        out = np.repeat(out, 3, axis=1)
    return out
