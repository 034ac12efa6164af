"""Dataset adapters and synthetic generators.

Real-format loaders read MNIST idx files and the CIFAR-10 python pickles
when a data root is available (``DUCA_DATA_ROOT`` overrides configured
roots). The synthetic generators produce deterministic, desk-scale
datasets through the same interface:

* ``synthetic-shapes``: up to 10 classes defined purely by geometry
  (disk, square, triangle, ...) with nuisance color, placement, and
  pixel noise. Classes are only separable by shape, which is the regime
  the shape-biased learner targets.
* ``synthetic-blobs``: arbitrary class count, classes defined by fixed
  blob layouts; cheap structural-test fuel.
"""

import gzip
import os
import pickle
import struct

import numpy as np

from .errors import ConfigurationError, DataError

SHAPE_CLASS_NAMES = [
    "disk", "square", "triangle", "plus", "saltire",
    "ring", "hbars", "vbars", "diamond", "checker",
]


class ArrayDataset:
    """Labeled image set held in memory: images (N,C,H,W) float32 in [0,1]."""

    def __init__(self, images, labels, class_names=None):
        self.images = images
        self.labels = np.asarray(labels, dtype=np.int64)
        self.class_names = class_names

    def __len__(self):
        return self.images.shape[0]

    @property
    def num_classes(self):
        if self.class_names is not None:
            return len(self.class_names)
        return int(self.labels.max()) + 1

    def take(self, indices):
        return self.images[indices]

    def subset(self, indices):
        return ArrayDataset(self.images[indices], self.labels[indices], self.class_names)


def _mask_for_class(cls, u, v, t):
    """Archetype membership test; ``t`` scales stroke thickness."""
    r = np.sqrt(u * u + v * v)
    if cls == 0:
        return r <= 0.62
    if cls == 1:
        return np.maximum(np.abs(u), np.abs(v)) <= 0.55
    if cls == 2:
        return (v >= -0.52) & (v <= 1.05 - 2.2 * np.abs(u))
    if cls == 3:
        return ((np.abs(u) <= 0.20 * t) & (np.abs(v) <= 0.72)) | \
               ((np.abs(v) <= 0.20 * t) & (np.abs(u) <= 0.72))
    if cls == 4:
        return (np.abs(np.abs(u) - np.abs(v)) <= 0.17 * t) & \
               (np.maximum(np.abs(u), np.abs(v)) <= 0.75)
    if cls == 5:
        return (r >= 0.62 - 0.26 * t) & (r <= 0.62)
    if cls == 6:
        return (np.abs(u) <= 0.66) & ((np.abs(v - 0.34) <= 0.13 * t) |
                                      (np.abs(v + 0.34) <= 0.13 * t))
    if cls == 7:
        return (np.abs(v) <= 0.66) & ((np.abs(u - 0.34) <= 0.13 * t) |
                                      (np.abs(u + 0.34) <= 0.13 * t))
    if cls == 8:
        return np.abs(u) + np.abs(v) <= 0.72
    if cls == 9:
        return (u * v > 0) & (np.maximum(np.abs(u), np.abs(v)) <= 0.62)
    raise ConfigurationError(f"no shape archetype for class {cls}")


def _sample_grid(size):
    coords = (np.arange(size * 2) + 0.5) / (size * 2) * 2.0 - 1.0
    return coords[None, :], coords[:, None]


def _render_shape(cls, size, rng):
    """Anti-aliased mask for one sample with pose and outline deformation.

    Every sample gets its own rotation, anisotropic scale, position,
    stroke thickness, and a radial wobble of the outline, so the class
    manifold is far wider than any small replay buffer can cover.
    """
    x, y = _sample_grid(size)
    angle = np.deg2rad(rng.uniform(-20, 20))
    scale = rng.uniform(0.55, 1.0)
    aniso = rng.uniform(0.8, 1.25, size=2)
    cx, cy = rng.uniform(-0.22, 0.22, size=2)
    thickness = rng.uniform(0.75, 1.35)
    ca, sa = np.cos(angle), np.sin(angle)
    u = (ca * (x - cx) + sa * (y - cy)) / (scale * aniso[0])
    v = (-sa * (x - cx) + ca * (y - cy)) / (scale * aniso[1])
    # radial outline wobble
    amp = rng.uniform(0.0, 0.15)
    lobes = rng.integers(2, 6)
    phase = rng.uniform(0, 2 * np.pi)
    wobble = 1.0 + amp * np.sin(lobes * np.arctan2(v, u) + phase)
    u = u / wobble
    v = v / wobble
    mask = _mask_for_class(cls, u, v, thickness).astype(np.float32)
    return mask.reshape(size, 2, size, 2).mean(axis=(1, 3))


def _render_clutter(size, rng, channels):
    """Low-contrast distractor blobs composited under the main shape."""
    x, y = _sample_grid(size)
    canvas = np.zeros((channels, size * 2, size * 2), dtype=np.float32)
    for _ in range(rng.integers(1, 3)):
        cx, cy = rng.uniform(-0.85, 0.85, size=2)
        rx, ry = rng.uniform(0.08, 0.28, size=2)
        blob = (((x - cx) / rx) ** 2 + ((y - cy) / ry) ** 2 <= 1.0)
        color = rng.uniform(0.15, 0.75, size=channels).astype(np.float32)
        canvas = np.where(blob[None], color[:, None, None], canvas)
    return canvas.reshape(channels, size, 2, size, 2).mean(axis=(2, 4))


def _generate_shape_split(archetypes, per_class, size, channels, rng):
    n = len(archetypes) * per_class
    images = np.empty((n, channels, size, size), dtype=np.float32)
    labels = np.empty(n, dtype=np.int64)
    coords = (np.arange(size) + 0.5) / size * 2.0 - 1.0
    i = 0
    for cls, archetype in enumerate(archetypes):
        for _ in range(per_class):
            mask = _render_shape(archetype, size, rng)
            if channels == 3:
                fg = rng.uniform(0.45, 1.0, size=3).astype(np.float32)
                bg = rng.uniform(0.0, 0.30, size=3).astype(np.float32)
            else:
                fg = rng.uniform(0.60, 1.0, size=1).astype(np.float32)
                bg = rng.uniform(0.0, 0.25, size=1).astype(np.float32)
            gx, gy = rng.uniform(-0.15, 0.15, size=2)
            gradient = (gx * coords[None, :] + gy * coords[:, None]).astype(np.float32)
            img = bg[:, None, None] + gradient[None]
            clutter = _render_clutter(size, rng, channels)
            img = np.where(clutter > 0, clutter, img)
            # foreground with its own soft shading
            shade = 1.0 + gy * coords[:, None] - gx * coords[None, :]
            fg_img = (fg[:, None, None] * shade[None]).astype(np.float32)
            img = img + mask[None] * (fg_img - img)
            img += rng.normal(0.0, 0.05, size=img.shape).astype(np.float32)
            images[i] = np.clip(img, 0.0, 1.0)
            labels[i] = cls
            i += 1
    return images, labels


def synthetic_shapes(num_classes=10, size=32, channels=3, train_per_class=500,
                     test_per_class=100, seed=0, classes=None):
    """Geometry-defined class dataset; deterministic given the seed.

    ``classes`` selects archetypes by name (label = list position); by
    default the first ``num_classes`` archetypes are used. Rotation
    streams should pick a subset without rotational aliases (e.g. leave
    out one of hbars/vbars), since aliased pairs make labels ambiguous
    across domains.
    """
    if classes is not None:
        unknown = set(classes) - set(SHAPE_CLASS_NAMES)
        if unknown:
            raise ConfigurationError(f"unknown shape classes {sorted(unknown)}")
        names = list(classes)
        num_classes = len(names)
    else:
        names = SHAPE_CLASS_NAMES[:num_classes]
    if not 2 <= num_classes <= len(SHAPE_CLASS_NAMES):
        raise ConfigurationError(
            f"synthetic-shapes supports 2..{len(SHAPE_CLASS_NAMES)} classes, got {num_classes}"
        )
    if channels not in (1, 3):
        raise ConfigurationError("channels must be 1 or 3")
    rng = np.random.default_rng(seed)
    archetypes = [SHAPE_CLASS_NAMES.index(n) for n in names]
    tr = _generate_shape_split(archetypes, train_per_class, size, channels, rng)
    te = _generate_shape_split(archetypes, test_per_class, size, channels, rng)
    return (ArrayDataset(tr[0], tr[1], names), ArrayDataset(te[0], te[1], names))


def synthetic_blobs(num_classes, size=16, channels=1, train_per_class=20,
                    test_per_class=5, seed=0):
    """Arbitrary-K dataset where each class is a fixed layout of soft blobs."""
    rng = np.random.default_rng(seed)
    coords = (np.arange(size) + 0.5) / size * 2.0 - 1.0
    x = coords[None, :]
    y = coords[:, None]
    centers = []
    for cls in range(num_classes):
        crng = np.random.default_rng(1_000_003 * (cls + 1))
        centers.append(crng.uniform(-0.7, 0.7, size=(3, 2)))

    def split(per_class):
        n = num_classes * per_class
        images = np.empty((n, channels, size, size), dtype=np.float32)
        labels = np.empty(n, dtype=np.int64)
        i = 0
        for cls in range(num_classes):
            for _ in range(per_class):
                canvas = np.zeros((size, size), dtype=np.float32)
                jitter = rng.uniform(-0.08, 0.08, size=(3, 2))
                for (cy, cx), (jy, jx) in zip(centers[cls], jitter):
                    canvas += np.exp(-(((x - cx - jx) ** 2) + ((y - cy - jy) ** 2)) / 0.045)
                canvas += rng.normal(0.0, 0.05, size=canvas.shape).astype(np.float32)
                images[i] = np.clip(canvas, 0.0, 1.0)[None]
                labels[i] = cls
                i += 1
        return images, labels

    names = [f"blob_{i}" for i in range(num_classes)]
    tr = split(train_per_class)
    te = split(test_per_class)
    return (ArrayDataset(tr[0], tr[1], names), ArrayDataset(te[0], te[1], names))


def _read_idx(path):
    opener = gzip.open if str(path).endswith(".gz") else open
    with opener(path, "rb") as f:
        magic, = struct.unpack(">i", f.read(4))
        ndim = magic & 0xFF
        dims = struct.unpack(">" + "i" * ndim, f.read(4 * ndim))
        data = np.frombuffer(f.read(), dtype=np.uint8)
    return data.reshape(dims)


def _find_idx_file(root, stem):
    for cand in (stem, stem + ".gz"):
        p = os.path.join(root, cand)
        if os.path.exists(p):
            return p
    raise DataError(f"missing MNIST file {stem}[.gz] under {root}")


def load_mnist(root):
    """MNIST from idx files (optionally gzipped) under the given root."""
    train_x = _read_idx(_find_idx_file(root, "train-images-idx3-ubyte"))
    train_y = _read_idx(_find_idx_file(root, "train-labels-idx1-ubyte"))
    test_x = _read_idx(_find_idx_file(root, "t10k-images-idx3-ubyte"))
    test_y = _read_idx(_find_idx_file(root, "t10k-labels-idx1-ubyte"))
    names = [str(d) for d in range(10)]

    def wrap(x, y):
        imgs = (x.astype(np.float32) / 255.0)[:, None]
        return ArrayDataset(imgs, y.astype(np.int64), names)

    return wrap(train_x, train_y), wrap(test_x, test_y)


def load_cifar10(root):
    """CIFAR-10 from the python pickle batches under the given root."""
    base = os.path.join(root, "cifar-10-batches-py")
    if not os.path.isdir(base):
        base = root

    def read_batch(name):
        path = os.path.join(base, name)
        if not os.path.exists(path):
            raise DataError(f"missing CIFAR-10 batch {name} under {base}")
        with open(path, "rb") as f:
            d = pickle.load(f, encoding="bytes")
        x = np.asarray(d[b"data"], dtype=np.uint8).reshape(-1, 3, 32, 32)
        y = np.asarray(d[b"labels"], dtype=np.int64)
        return x, y

    xs, ys = zip(*[read_batch(f"data_batch_{i}") for i in range(1, 6)])
    train_x = np.concatenate(xs)
    train_y = np.concatenate(ys)
    test_x, test_y = read_batch("test_batch")
    names = ["airplane", "automobile", "bird", "cat", "deer",
             "dog", "frog", "horse", "ship", "truck"]

    def wrap(x, y):
        return ArrayDataset(x.astype(np.float32) / 255.0, y, names)

    return wrap(train_x, train_y), wrap(test_x, test_y)


def load_cifar100(root):
    """CIFAR-100 (fine labels) from the python pickles under the given root."""
    base = os.path.join(root, "cifar-100-python")
    if not os.path.isdir(base):
        base = root

    def read(name):
        path = os.path.join(base, name)
        if not os.path.exists(path):
            raise DataError(f"missing CIFAR-100 file {name} under {base}")
        with open(path, "rb") as f:
            d = pickle.load(f, encoding="bytes")
        x = np.asarray(d[b"data"], dtype=np.uint8).reshape(-1, 3, 32, 32)
        y = np.asarray(d[b"fine_labels"], dtype=np.int64)
        return ArrayDataset(x.astype(np.float32) / 255.0, y,
                            [f"class_{i}" for i in range(100)])

    return read("train"), read("test")


def resolve_data_root(configured=None):
    """DUCA_DATA_ROOT wins over the configured root when set."""
    return os.environ.get("DUCA_DATA_ROOT") or configured


def get_dataset(name, root=None, **params):
    """Registry front door used by configs: returns (train, test)."""
    if name == "synthetic-shapes":
        return synthetic_shapes(**params)
    if name == "synthetic-blobs":
        return synthetic_blobs(**params)
    root = resolve_data_root(root)
    if name == "mnist":
        if root is None:
            raise DataError("mnist requires a data root (config or DUCA_DATA_ROOT)")
        return load_mnist(root)
    if name == "cifar10":
        if root is None:
            raise DataError("cifar10 requires a data root (config or DUCA_DATA_ROOT)")
        return load_cifar10(root)
    if name == "cifar100":
        if root is None:
            raise DataError("cifar100 requires a data root (config or DUCA_DATA_ROOT)")
        return load_cifar100(root)
    raise ConfigurationError(f"unknown dataset {name!r}")
