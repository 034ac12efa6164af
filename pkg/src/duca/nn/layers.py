"""Layer primitives with explicit forward/backward passes.

Layers are functional about activations: ``forward`` returns ``(out, cache)``
and ``backward`` consumes that cache, so several forward passes (current
batch, buffer batch) can be kept alive at once and backpropagated in any
order. Parameter gradients accumulate in ``Param.grad`` until ``zero_grad``.
"""

import numpy as np

from .. import kernels
from ..errors import StructuralError


class Param:
    """A named tensor with an accumulated gradient."""

    __slots__ = ("name", "value", "grad")

    def __init__(self, name, value):
        self.name = name
        self.value = value
        self.grad = np.zeros_like(value)


class Layer:
    def params(self):
        return []

    def buffers(self):
        """Non-learnable state (normalization running statistics)."""
        return []

    def forward(self, x, train):
        raise NotImplementedError

    def backward(self, cache, dy):
        raise NotImplementedError


class Linear(Layer):
    def __init__(self, in_features, out_features, rng, dtype):
        bound = 1.0 / np.sqrt(in_features)
        w = rng.uniform(-bound, bound, size=(out_features, in_features))
        b = rng.uniform(-bound, bound, size=out_features)
        self.w = Param("weight", w.astype(dtype))
        self.b = Param("bias", b.astype(dtype))

    def params(self):
        return [self.w, self.b]

    def forward(self, x, train):
        return x @ self.w.value.T + self.b.value, x

    def backward(self, cache, dy):
        x = cache
        self.w.grad += dy.T @ x
        self.b.grad += dy.sum(axis=0)
        return dy @ self.w.value


class Conv2d(Layer):
    def __init__(self, in_ch, out_ch, rng, dtype, kernel=3, stride=1, pad=1):
        self.kernel = kernel
        self.stride = stride
        self.pad = pad
        fan_in = in_ch * kernel * kernel
        w = rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(out_ch, in_ch, kernel, kernel))
        self.w = Param("weight", w.astype(dtype))
        self.b = Param("bias", np.zeros(out_ch, dtype=dtype))

    def params(self):
        return [self.w, self.b]

    def forward(self, x, train):
        n, c, h, w = x.shape
        k, s, p = self.kernel, self.stride, self.pad
        oh = (h + 2 * p - k) // s + 1
        ow = (w + 2 * p - k) // s + 1
        cols = kernels.im2col(x, k, k, s, p)
        wmat = self.w.value.reshape(self.w.value.shape[0], -1)
        out = cols.reshape(n * oh * ow, -1) @ wmat.T + self.b.value
        out = out.reshape(n, oh * ow, -1).transpose(0, 2, 1).reshape(n, -1, oh, ow)
        return out, (cols, x.shape, oh, ow)

    def backward(self, cache, dy):
        cols, x_shape, oh, ow = cache
        n = x_shape[0]
        cout = dy.shape[1]
        dyr = dy.reshape(n, cout, oh * ow).transpose(0, 2, 1).reshape(n * oh * ow, cout)
        colsr = cols.reshape(n * oh * ow, -1)
        wmat = self.w.value.reshape(cout, -1)
        self.w.grad += (dyr.T @ colsr).reshape(self.w.value.shape)
        self.b.grad += dyr.sum(axis=0)
        dcols = (dyr @ wmat).reshape(n, oh * ow, -1)
        return kernels.col2im(dcols, x_shape, self.kernel, self.kernel, self.stride, self.pad)


class BatchNorm2d(Layer):
    def __init__(self, channels, dtype, momentum=0.1, eps=1e-5):
        self.momentum = momentum
        self.eps = eps
        self.gamma = Param("gamma", np.ones(channels, dtype=dtype))
        self.beta = Param("beta", np.zeros(channels, dtype=dtype))
        self.running_mean = Param("running_mean", np.zeros(channels, dtype=dtype))
        self.running_var = Param("running_var", np.ones(channels, dtype=dtype))

    def params(self):
        return [self.gamma, self.beta]

    def buffers(self):
        return [self.running_mean, self.running_var]

    def forward(self, x, train):
        g = self.gamma.value[None, :, None, None]
        b = self.beta.value[None, :, None, None]
        if train:
            mean = x.mean(axis=(0, 2, 3))
            xc = x - mean[None, :, None, None]
            var = np.mean(xc * xc, axis=(0, 2, 3))
            invstd = 1.0 / np.sqrt(var + np.asarray(self.eps, dtype=x.dtype))
            xc *= invstd[None, :, None, None]
            xhat = xc
            m = x.shape[0] * x.shape[2] * x.shape[3]
            unbiased = var * (m / max(m - 1, 1))
            mom = np.asarray(self.momentum, dtype=x.dtype)
            self.running_mean.value[:] = (1 - mom) * self.running_mean.value + mom * mean
            self.running_var.value[:] = (1 - mom) * self.running_var.value + mom * unbiased
            out = xhat * g
            out += b
            return out, (True, xhat, invstd)
        invstd = 1.0 / np.sqrt(self.running_var.value + np.asarray(self.eps, dtype=x.dtype))
        xhat = (x - self.running_mean.value[None, :, None, None]) * invstd[None, :, None, None]
        out = xhat * g
        out += b
        return out, (False, xhat, invstd)

    def backward(self, cache, dy):
        train, xhat, invstd = cache
        # (dy*xhat).sum doubles as the gamma gradient and the projection
        # term of the train-mode input gradient
        t2 = (dy * xhat).sum(axis=(0, 2, 3))
        t1 = dy.sum(axis=(0, 2, 3))
        self.gamma.grad += t2
        self.beta.grad += t1
        g = self.gamma.value
        if not train:
            return dy * (g * invstd)[None, :, None, None]
        m = dy.shape[0] * dy.shape[2] * dy.shape[3]
        dx = dy * np.asarray(m, dtype=dy.dtype)
        dx -= t1[None, :, None, None]
        dx -= xhat * t2[None, :, None, None]
        dx *= (g * invstd / m)[None, :, None, None]
        return dx


class ReLU(Layer):
    def forward(self, x, train):
        mask = x > 0
        return x * mask, mask

    def backward(self, cache, dy):
        return dy * cache


class MaxPool2d(Layer):
    """2x2, stride 2; odd trailing rows/columns are dropped."""

    def forward(self, x, train):
        out, idx = kernels.maxpool2x2(x)
        return out, (idx, x.shape)

    def backward(self, cache, dy):
        idx, x_shape = cache
        return kernels.maxpool2x2_backward(dy, idx, x_shape)


class GlobalAvgPool(Layer):
    def forward(self, x, train):
        return x.mean(axis=(2, 3)), x.shape

    def backward(self, cache, dy):
        n, c, h, w = cache
        scale = np.asarray(1.0 / (h * w), dtype=dy.dtype)
        return np.broadcast_to((dy * scale)[:, :, None, None], cache).copy()


class Flatten(Layer):
    def forward(self, x, train):
        return x.reshape(x.shape[0], -1), x.shape

    def backward(self, cache, dy):
        return dy.reshape(cache)


class Sequential(Layer):
    def __init__(self, layers):
        self.layers = list(layers)

    def params(self):
        return [p for l in self.layers for p in l.params()]

    def buffers(self):
        return [b for l in self.layers for b in l.buffers()]

    def forward(self, x, train):
        caches = []
        for layer in self.layers:
            x, c = layer.forward(x, train)
            caches.append(c)
        return x, caches

    def backward(self, caches, dy):
        for layer, c in zip(reversed(self.layers), reversed(caches)):
            dy = layer.backward(c, dy)
        return dy


class BasicBlock(Layer):
    """Two 3x3 conv/BN stages with an identity or projected skip connection."""

    def __init__(self, in_ch, out_ch, stride, rng, dtype):
        self.conv1 = Conv2d(in_ch, out_ch, rng, dtype, stride=stride)
        self.bn1 = BatchNorm2d(out_ch, dtype)
        self.conv2 = Conv2d(out_ch, out_ch, rng, dtype)
        self.bn2 = BatchNorm2d(out_ch, dtype)
        if stride != 1 or in_ch != out_ch:
            self.proj_conv = Conv2d(in_ch, out_ch, rng, dtype, kernel=1, stride=stride, pad=0)
            self.proj_bn = BatchNorm2d(out_ch, dtype)
        else:
            self.proj_conv = None
            self.proj_bn = None

    def params(self):
        out = self.conv1.params() + self.bn1.params() + self.conv2.params() + self.bn2.params()
        if self.proj_conv is not None:
            out += self.proj_conv.params() + self.proj_bn.params()
        return out

    def buffers(self):
        out = self.bn1.buffers() + self.bn2.buffers()
        if self.proj_bn is not None:
            out += self.proj_bn.buffers()
        return out

    def forward(self, x, train):
        h, c1 = self.conv1.forward(x, train)
        h, cb1 = self.bn1.forward(h, train)
        mask1 = h > 0
        h = h * mask1
        h, c2 = self.conv2.forward(h, train)
        h, cb2 = self.bn2.forward(h, train)
        if self.proj_conv is not None:
            s, cp = self.proj_conv.forward(x, train)
            s, cpb = self.proj_bn.forward(s, train)
        else:
            s, cp, cpb = x, None, None
        y = h + s
        mask2 = y > 0
        return y * mask2, (c1, cb1, mask1, c2, cb2, cp, cpb, mask2)

    def backward(self, cache, dy):
        c1, cb1, mask1, c2, cb2, cp, cpb, mask2 = cache
        dz = dy * mask2
        dh = self.bn2.backward(cb2, dz)
        dh = self.conv2.backward(c2, dh)
        dh = dh * mask1
        dh = self.bn1.backward(cb1, dh)
        dx = self.conv1.backward(c1, dh)
        if self.proj_conv is not None:
            ds = self.proj_bn.backward(cpb, dz)
            ds = self.proj_conv.backward(cp, ds)
        else:
            ds = dz
        return dx + ds


def check_same_structure(a_arrays, b_arrays):
    """Raise StructuralError unless the two array lists match in count and shape."""
    if len(a_arrays) != len(b_arrays):
        raise StructuralError(
            f"parameter count mismatch: {len(a_arrays)} vs {len(b_arrays)}"
        )
    for i, (a, b) in enumerate(zip(a_arrays, b_arrays)):
        if a.shape != b.shape:
            raise StructuralError(f"parameter {i} shape mismatch: {a.shape} vs {b.shape}")
