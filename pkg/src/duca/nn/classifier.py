"""Classifier = encoder + linear head, plus parameter-space operations.

Three architectures are registered: ``mlp`` and ``small-cnn`` keep
benchmark runs fast on a CPU, ``resnet18`` (CIFAR-style 3x3 stem) matches
the full-scale configuration. Construction is deterministic given the
seed; evaluation-mode forward is a pure function of (parameters, input).
"""

import io
import json

import numpy as np

from ..errors import ConfigurationError, StructuralError
from .layers import (
    BasicBlock,
    BatchNorm2d,
    Conv2d,
    Flatten,
    GlobalAvgPool,
    Linear,
    MaxPool2d,
    ReLU,
    Sequential,
    check_same_structure,
)


class ArchitectureSpec:
    """Architecture name, input shape (C,H,W) and a width knob."""

    def __init__(self, name, input_shape, width=None):
        self.name = name
        self.input_shape = tuple(int(v) for v in input_shape)
        self.width = width

    def to_dict(self):
        return {"name": self.name, "input_shape": list(self.input_shape), "width": self.width}

    @classmethod
    def from_dict(cls, d):
        return cls(d["name"], tuple(d["input_shape"]), d.get("width"))

    def __repr__(self):
        return f"ArchitectureSpec({self.name!r}, {self.input_shape}, width={self.width})"


def _build_mlp(spec, num_classes, rng, dtype):
    width = spec.width or 256
    in_features = int(np.prod(spec.input_shape))
    return Sequential([
        Flatten(),
        Linear(in_features, width, rng, dtype),
        ReLU(),
        Linear(width, width, rng, dtype),
        ReLU(),
        Linear(width, num_classes, rng, dtype),
    ])


def _build_small_cnn(spec, num_classes, rng, dtype):
    c, h, w = spec.input_shape
    if h < 12 or w < 12:
        raise ConfigurationError(f"small-cnn needs inputs of at least 12x12, got {h}x{w}")
    base = spec.width or 32
    chans = [base, base * 2, base * 4]
    layers = []
    prev = c
    for ch in chans:
        layers += [Conv2d(prev, ch, rng, dtype), BatchNorm2d(ch, dtype), ReLU(), MaxPool2d()]
        prev = ch
    fh, fw = h, w
    for _ in chans:
        fh, fw = fh // 2, fw // 2
    encoder = Sequential(layers + [Flatten()])
    head = Linear(chans[-1] * fh * fw, num_classes, rng, dtype)
    return Sequential([encoder, head])


def _build_resnet18(spec, num_classes, rng, dtype):
    c, h, w = spec.input_shape
    if h < 16 or w < 16:
        raise ConfigurationError(f"resnet18 needs inputs of at least 16x16, got {h}x{w}")
    base = spec.width or 64
    layers = [Conv2d(c, base, rng, dtype), BatchNorm2d(base, dtype), ReLU()]
    widths = [base, base * 2, base * 4, base * 8]
    in_ch = base
    for stage, out_ch in enumerate(widths):
        stride = 1 if stage == 0 else 2
        layers.append(BasicBlock(in_ch, out_ch, stride, rng, dtype))
        layers.append(BasicBlock(out_ch, out_ch, 1, rng, dtype))
        in_ch = out_ch
    layers.append(GlobalAvgPool())
    layers.append(Linear(in_ch, num_classes, rng, dtype))
    return Sequential(layers)


ARCHITECTURES = {
    "mlp": _build_mlp,
    "small-cnn": _build_small_cnn,
    "resnet18": _build_resnet18,
}


class Classifier:
    """Encoder plus linear head producing K-column logits."""

    def __init__(self, spec, num_classes, net, dtype):
        self.spec = spec
        self.num_classes = num_classes
        self.net = net
        self.dtype = dtype

    def _prepare(self, x):
        x = np.asarray(x)
        flat = int(np.prod(self.spec.input_shape))
        if x.ndim == 2 and x.shape[1] == flat:
            x = x.reshape(x.shape[0], *self.spec.input_shape)
        if x.ndim != 4 or x.shape[1:] != self.spec.input_shape:
            raise StructuralError(
                f"expected batch of shape (N, {self.spec.input_shape}), got {x.shape}"
            )
        return x.astype(self.dtype, copy=False)

    def forward_train(self, x):
        """Training-mode forward; returns (logits, cache) for a later backward."""
        return self.net.forward(self._prepare(x), train=True)

    def logits(self, x):
        """Evaluation-mode forward (inference statistics, no cache kept)."""
        out, _ = self.net.forward(self._prepare(x), train=False)
        return out

    def backward(self, cache, dlogits):
        return self.net.backward(cache, dlogits)

    def params(self):
        return self.net.params()

    def buffers(self):
        return self.net.buffers()

    def state_arrays(self):
        """All arrays that define behaviour: parameters then running stats."""
        return [p.value for p in self.params()] + [b.value for b in self.buffers()]

    def zero_grad(self):
        for p in self.params():
            p.grad[...] = 0


def build_classifier(spec, num_classes, seed, dtype=np.float32):
    """Deterministically initialize a Classifier from (spec, num_classes, seed)."""
    if num_classes < 2:
        raise ConfigurationError(f"num_classes must be >= 2, got {num_classes}")
    if spec.name not in ARCHITECTURES:
        raise ConfigurationError(
            f"unknown architecture {spec.name!r}; available: {sorted(ARCHITECTURES)}"
        )
    if len(spec.input_shape) != 3 or any(v <= 0 for v in spec.input_shape):
        raise ConfigurationError(f"bad input_shape {spec.input_shape}")
    rng = np.random.default_rng(seed)
    net = ARCHITECTURES[spec.name](spec, num_classes, rng, dtype)
    return Classifier(spec, num_classes, net, dtype)


def copy_parameters(target, source):
    """Overwrite the target's parameters and running stats with the source's."""
    t, s = target.state_arrays(), source.state_arrays()
    check_same_structure(t, s)
    for ta, sa in zip(t, s):
        ta[...] = sa


def blend_parameters(target, source, d):
    """In place, every target array becomes d*target + (1-d)*source.

    Covers learnable parameters and normalization running statistics so the
    blended network is a usable standalone inference model.
    """
    if not 0.0 <= d <= 1.0:
        raise ConfigurationError(f"blend factor must lie in [0,1], got {d}")
    t, s = target.state_arrays(), source.state_arrays()
    check_same_structure(t, s)
    if d == 0.0:
        for ta, sa in zip(t, s):
            ta[...] = sa
    elif d != 1.0:
        for ta, sa in zip(t, s):
            ta[...] = d * ta + (1.0 - d) * sa


def save_checkpoint(clf, path):
    """Write a classifier to a single file; round-trips bit-exactly."""
    meta = {
        "spec": clf.spec.to_dict(),
        "num_classes": clf.num_classes,
        "dtype": np.dtype(clf.dtype).name,
    }
    arrays = {f"arr_{i:04d}": a for i, a in enumerate(clf.state_arrays())}
    buf = io.BytesIO()
    np.savez(buf, meta=np.frombuffer(json.dumps(meta).encode(), dtype=np.uint8), **arrays)
    with open(path, "wb") as f:
        f.write(buf.getvalue())


def load_checkpoint(path):
    with np.load(path) as data:
        meta = json.loads(bytes(data["meta"]).decode())
        arrays = [data[f"arr_{i:04d}"] for i in range(len(data.files) - 1)]
    spec = ArchitectureSpec.from_dict(meta["spec"])
    clf = build_classifier(spec, meta["num_classes"], seed=0, dtype=np.dtype(meta["dtype"]))
    state = clf.state_arrays()
    check_same_structure(state, arrays)
    for ta, sa in zip(state, arrays):
        ta[...] = sa
    return clf
