"""Task-stream construction for the four continual-learning settings.

Sequential (class/task-incremental) streams partition the label space into
equal contiguous groups. Generalized class-incremental streams draw class
subsets and per-class sample counts per task; the ``uniform`` variant uses
a balanced appearance design so every appearing class contributes the same
total sample count over the stream. Domain streams take one task per
domain from a DomainManifest (rotated digits or a directory-backed subset).
"""

import os
from dataclasses import dataclass, field

import numpy as np

from .datasets import ArrayDataset
from .errors import ConfigurationError, DataError, ManifestError

MANIFEST_HEADER = "# duca-domain-manifest v1"


class PathDataset:
    """Labeled images referenced by path, decoded on access."""

    def __init__(self, root, relpaths, labels, class_names, image_size):
        self.root = root
        self.relpaths = list(relpaths)
        self.labels = np.asarray(labels, dtype=np.int64)
        self.class_names = class_names
        self.image_size = image_size

    def __len__(self):
        return len(self.relpaths)

    @property
    def num_classes(self):
        return len(self.class_names)

    def take(self, indices):
        from PIL import Image

        out = np.empty((len(indices), 3, self.image_size, self.image_size), dtype=np.float32)
        for i, idx in enumerate(indices):
            path = os.path.join(self.root, self.relpaths[idx])
            try:
                with Image.open(path) as im:
                    im = im.convert("RGB").resize(
                        (self.image_size, self.image_size), Image.BILINEAR
                    )
                    out[i] = np.asarray(im, dtype=np.float32).transpose(2, 0, 1) / 255.0
            except OSError as e:
                raise DataError(f"cannot read image {path}: {e}") from e
        return out

    def subset(self, indices):
        return PathDataset(
            self.root,
            [self.relpaths[i] for i in indices],
            self.labels[indices],
            self.class_names,
            self.image_size,
        )


@dataclass
class TaskDataset:
    task_id: int
    classes: list
    train: object
    test: object

    def __post_init__(self):
        for split in (self.train, self.test):
            bad = set(np.unique(split.labels)) - set(self.classes)
            if bad:
                raise ConfigurationError(
                    f"task {self.task_id} contains labels {sorted(bad)} outside its class list"
                )


@dataclass
class TaskStream:
    setting: str
    tasks: list
    num_classes: int
    class_names: list = None

    @property
    def num_tasks(self):
        return len(self.tasks)

    def task_class_lists(self):
        return [t.classes for t in self.tasks]


@dataclass
class Domain:
    name: str
    train: object
    test: object


@dataclass
class DomainManifest:
    """Ordered list of domains sharing one label space.

    Built in memory (rotated digits) or parsed from the tabular text
    format that the subset builder emits.
    """

    domains: list
    class_names: list
    image_size: int = None
    rows: list = field(default_factory=list)


def build_sequential(data, num_tasks, seed=0, shuffle_classes=False):
    """Split classes into equal contiguous groups after an optional shuffle."""
    train, test = data
    k = train.num_classes
    if num_tasks < 1 or k % num_tasks != 0:
        raise ConfigurationError(
            f"{k} classes cannot be split into {num_tasks} equal tasks"
        )
    order = np.arange(k)
    if shuffle_classes:
        np.random.default_rng(seed).shuffle(order)
    per = k // num_tasks
    tasks = []
    for t in range(num_tasks):
        classes = sorted(int(c) for c in order[t * per:(t + 1) * per])
        tr_idx = np.flatnonzero(np.isin(train.labels, classes))
        te_idx = np.flatnonzero(np.isin(test.labels, classes))
        tasks.append(TaskDataset(t, classes, train.subset(tr_idx), test.subset(te_idx)))
    return TaskStream("class_il", tasks, k, train.class_names)


def _balanced_appearances(k, num_tasks, classes_per_task, rng):
    """Deal class ids into tasks: equal appearance counts, no within-task dups."""
    total = num_tasks * classes_per_task
    if total % k != 0:
        raise ConfigurationError(
            f"uniform variant needs num_tasks*classes_per_task divisible by {k} classes"
        )
    m = total // k
    deck = np.repeat(np.arange(k), m)
    for _ in range(200):
        rng.shuffle(deck)
        grid = deck.reshape(num_tasks, classes_per_task).copy()
        ok = True
        for t in range(num_tasks):
            if len(set(grid[t])) != classes_per_task:
                ok = False
                break
        if ok:
            return grid
        # greedy repair: swap duplicates into tasks that can host them
        for t in range(num_tasks):
            seen = set()
            for j in range(classes_per_task):
                c = grid[t, j]
                if c not in seen:
                    seen.add(c)
                    continue
                fixed = False
                for t2 in range(num_tasks):
                    if t2 == t:
                        continue
                    for j2 in range(classes_per_task):
                        c2 = grid[t2, j2]
                        if c2 not in grid[t] and c not in grid[t2]:
                            grid[t, j], grid[t2, j2] = c2, c
                            seen.add(c2)
                            fixed = True
                            break
                    if fixed:
                        break
                if not fixed:
                    break
        ok = all(len(set(grid[t])) == classes_per_task for t in range(num_tasks))
        if ok:
            return grid
    raise ConfigurationError("could not build a balanced class-appearance design")


def build_gcil(data, num_tasks, variant, params=None, seed=0):
    """Generalized class-incremental stream; classes may recur across tasks."""
    if variant not in ("uniform", "longtail"):
        raise ConfigurationError(f"unknown gcil variant {variant!r}")
    params = dict(params or {})
    classes_per_task = int(params.pop("classes_per_task", 20))
    samples_per_task = int(params.pop("samples_per_task", 1000))
    decay = float(params.pop("longtail_decay", 0.82))
    if params:
        raise ConfigurationError(f"unknown gcil params {sorted(params)}")
    train, test = data
    k = train.num_classes
    if classes_per_task > k:
        raise ConfigurationError(
            f"classes_per_task={classes_per_task} exceeds the {k}-class universe"
        )
    rng = np.random.default_rng(seed)
    pools = [np.flatnonzero(train.labels == c) for c in range(k)]

    if variant == "uniform":
        if samples_per_task % classes_per_task != 0:
            raise ConfigurationError("samples_per_task must divide evenly among classes")
        per_class = samples_per_task // classes_per_task
        grid = _balanced_appearances(k, num_tasks, classes_per_task, rng)
        counts_fn = lambda t: [per_class] * classes_per_task
    else:
        weights = decay ** np.arange(classes_per_task)
        weights = weights / weights.sum()
        raw = np.floor(weights * samples_per_task).astype(int)
        for i in range(samples_per_task - raw.sum()):
            raw[i % classes_per_task] += 1
        grid = np.stack([
            rng.choice(k, size=classes_per_task, replace=False) for _ in range(num_tasks)
        ])
        counts_fn = lambda t: list(raw)

    tasks = []
    for t in range(num_tasks):
        classes = [int(c) for c in grid[t]]
        counts = counts_fn(t)
        idx_parts = []
        for c, cnt in zip(classes, counts):
            pool = pools[c]
            if cnt > len(pool):
                raise ConfigurationError(
                    f"class {c} has {len(pool)} samples, task {t} wants {cnt}"
                )
            idx_parts.append(rng.choice(pool, size=cnt, replace=False))
        tr_idx = np.concatenate(idx_parts)
        te_idx = np.flatnonzero(np.isin(test.labels, classes))
        tasks.append(TaskDataset(t, sorted(classes), train.subset(tr_idx), test.subset(te_idx)))
    return TaskStream("gcil", tasks, k, train.class_names)


def rotate_images(images, angle_deg):
    """Rotate (N,C,H,W) about the image centre, bilinear, zero outside."""
    n, c, h, w = images.shape
    theta = np.deg2rad(angle_deg)
    ca, sa = np.cos(theta), np.sin(theta)
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    ys, xs = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
    # inverse map: output pixel samples the input at the back-rotated point
    u = ca * (xs - cx) + sa * (ys - cy) + cx
    v = -sa * (xs - cx) + ca * (ys - cy) + cy
    x0 = np.floor(u).astype(np.int64)
    y0 = np.floor(v).astype(np.int64)
    fx = (u - x0).astype(images.dtype)
    fy = (v - y0).astype(images.dtype)

    def gather(yy, xx):
        inside = (yy >= 0) & (yy < h) & (xx >= 0) & (xx < w)
        yc = np.clip(yy, 0, h - 1)
        xc = np.clip(xx, 0, w - 1)
        vals = images[:, :, yc, xc]
        return vals * inside.astype(images.dtype)

    a = gather(y0, x0)
    b = gather(y0, x0 + 1)
    d = gather(y0 + 1, x0)
    e = gather(y0 + 1, x0 + 1)
    top = a + fx * (b - a)
    bot = d + fx * (e - d)
    return top + fy * (bot - top)


def rotate_mnist(data, angles):
    """One domain per rotation angle, applied to train and test splits."""
    if len(angles) == 0:
        raise ConfigurationError("angles must be non-empty")
    train, test = data
    domains = []
    for angle in angles:
        name = f"rot{int(round(angle)) % 360:03d}"
        domains.append(Domain(
            name,
            ArrayDataset(rotate_images(train.images, angle), train.labels, train.class_names),
            ArrayDataset(rotate_images(test.images, angle), test.labels, test.class_names),
        ))
    return DomainManifest(domains, train.class_names)


def build_domain_stream(manifest):
    """One task per domain, in manifest order, over a shared label space."""
    if not manifest.domains:
        raise ManifestError("manifest lists no domains")

    def observed(dom):
        return set(np.unique(dom.train.labels)) | set(np.unique(dom.test.labels))

    base = observed(manifest.domains[0])
    for dom in manifest.domains[1:]:
        if observed(dom) != base:
            raise ManifestError(
                f"domain {dom.name!r} class set differs from {manifest.domains[0].name!r}"
            )
    classes = sorted(int(c) for c in base)
    k = len(manifest.class_names) if manifest.class_names else len(classes)
    tasks = [TaskDataset(t, classes, dom.train, dom.test)
             for t, dom in enumerate(manifest.domains)]
    return TaskStream("domain_il", tasks, k, manifest.class_names)


def write_manifest(path, rows, class_names, domain_names, image_size):
    """Write the tabular interchange format, sorted and byte-deterministic.

    Rows are (relpath, class_id, domain_id, split).
    """
    lines = [MANIFEST_HEADER,
             f"# image_size: {image_size}",
             "# classes: " + "\t".join(class_names),
             "# domains: " + "\t".join(domain_names)]
    for relpath, class_id, domain_id, split in rows:
        lines.append(f"{relpath}\t{class_id}\t{domain_id}\t{split}")
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


def read_manifest_rows(path):
    """Parse the text format; returns (rows, class_names, domain_names, size)."""
    class_names = domain_names = None
    image_size = None
    rows = []
    with open(path) as f:
        first = f.readline().rstrip("\n")
        if first != MANIFEST_HEADER:
            raise ManifestError(f"{path}: not a domain manifest (bad header line)")
        for lineno, line in enumerate(f, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("# image_size:"):
                image_size = int(line.split(":", 1)[1])
                continue
            if line.startswith("# classes:"):
                class_names = line.split(":", 1)[1].strip().split("\t")
                continue
            if line.startswith("# domains:"):
                domain_names = line.split(":", 1)[1].strip().split("\t")
                continue
            if line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 4:
                raise ManifestError(f"{path}:{lineno}: expected 4 tab-separated fields")
            relpath, class_id, domain_id, split = parts
            if split not in ("train", "test"):
                raise ManifestError(f"{path}:{lineno}: bad split {split!r}")
            rows.append((relpath, int(class_id), int(domain_id), split))
    if class_names is None or domain_names is None or image_size is None:
        raise ManifestError(f"{path}: missing classes/domains/image_size header")
    return rows, class_names, domain_names, image_size


def read_manifest(path, root=None):
    """Load a file-backed manifest into per-domain path datasets."""
    rows, class_names, domain_names, image_size = read_manifest_rows(path)
    root = root or os.path.dirname(os.path.abspath(path))
    domains = []
    for d, name in enumerate(domain_names):
        def rows_for(split):
            sel = [(r, c) for r, c, dd, s in rows if dd == d and s == split]
            return ([r for r, _ in sel], [c for _, c in sel])
        tr_paths, tr_labels = rows_for("train")
        te_paths, te_labels = rows_for("test")
        domains.append(Domain(
            name,
            PathDataset(root, tr_paths, tr_labels, class_names, image_size),
            PathDataset(root, te_paths, te_labels, class_names, image_size),
        ))
    return DomainManifest(domains, class_names, image_size, rows)
