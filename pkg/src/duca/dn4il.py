"""Balanced 100-class, 6-domain subset builder over a DomainNet tree.

Input layout: ``<root>/<domain>/<class>/<image>`` plus optional official
``<domain>_train.txt`` / ``<domain>_test.txt`` split lists. The builder
samples class-wise, then per domain, toward fixed train/test totals with
deterministic backfill when a (class, domain) pair runs short, and emits
the tabular DomainManifest format. Images are referenced, not copied;
``materialize`` writes a resized packed tree.
"""

import os
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, ManifestError
from .streams import read_manifest_rows, write_manifest

DOMAINS = ["real", "clipart", "infograph", "painting", "sketch", "quickdraw"]

SUPERCATEGORIES = {
    "small animals": ["mouse", "squirrel", "rabbit", "dog", "raccoon"],
    "medium animals": ["tiger", "bear", "lion", "panda", "zebra"],
    "large animals": ["camel", "horse", "kangaroo", "elephant", "cow"],
    "aquatic mammals": ["whale", "shark", "fish", "dolphin", "octopus"],
    "non-insect invertebrates": ["snail", "scorpion", "spider", "lobster", "crab"],
    "insects": ["bee", "butterfly", "mosquito", "bird", "bat"],
    "vehicle": ["bus", "bicycle", "motorbike", "train", "pickup_truck"],
    "sky-vehicle": ["airplane", "flying_saucer", "aircraft_carrier", "helicopter",
                    "hot_air_balloon"],
    "fruits": ["strawberry", "banana", "pear", "apple", "watermelon"],
    "vegetables": ["carrot", "asparagus", "mushroom", "onion", "broccoli"],
    "music": ["trombone", "violin", "cello", "guitar", "clarinet"],
    "furniture": ["chair", "dresser", "table", "couch", "bed"],
    "household electrical devices": ["clock", "floor_lamp", "telephone", "television",
                                     "keyboard"],
    "tools": ["saw", "axe", "hammer", "screwdriver", "scissors"],
    "clothes & accessories": ["bowtie", "pants", "jacket", "sock", "shorts"],
    "man-made outdoor": ["skyscraper", "windmill", "house", "castle", "bridge"],
    "nature": ["cloud", "bush", "ocean", "river", "mountain"],
    "food": ["birthday_cake", "hamburger", "ice_cream", "sandwich", "pizza"],
    "stationary": ["calendar", "marker", "map", "eraser", "pencil"],
    "household items": ["wine_bottle", "cup", "teapot", "frying_pan", "wine_glass"],
}

IMAGE_EXTENSIONS = (".jpg", ".jpeg", ".png", ".bmp", ".gif")


class ClassTable:
    """Supercategory -> class-name table defining the 100-class label space."""

    def __init__(self, supercategories=None):
        self.supercategories = supercategories or SUPERCATEGORIES
        self.class_names = [c for group in self.supercategories.values() for c in group]
        self.class_to_id = {c: i for i, c in enumerate(self.class_names)}

    def self_check(self):
        """Structural invariants: 20 supercategories of 5, all names unique."""
        problems = []
        if len(self.supercategories) != 20:
            problems.append(f"expected 20 supercategories, got {len(self.supercategories)}")
        for name, classes in self.supercategories.items():
            if len(classes) != 5:
                problems.append(f"supercategory {name!r} has {len(classes)} classes")
        if len(set(self.class_names)) != len(self.class_names):
            problems.append("duplicate class names across supercategories")
        if len(self.class_names) != 100 and not problems:
            problems.append(f"expected 100 classes, got {len(self.class_names)}")
        return problems


@dataclass
class BalancePolicy:
    """Targets for the sampled subset."""

    train_total: int = 67080
    test_total: int = 19464
    image_size: int = 64
    # used only when official split lists are absent
    test_fraction: float = 0.225

    def __post_init__(self):
        if self.train_total <= 0 or self.test_total <= 0:
            raise ValueError("totals must be positive")
        if not 0.0 < self.test_fraction < 1.0:
            raise ValueError("test_fraction must lie in (0,1)")


@dataclass
class BuildReport:
    per_pair: dict = field(default_factory=dict)
    shortfalls: list = field(default_factory=list)
    totals: dict = field(default_factory=dict)

    def summary(self):
        lines = [f"train rows: {self.totals.get('train', 0)}",
                 f"test rows:  {self.totals.get('test', 0)}"]
        if self.shortfalls:
            lines.append(f"shortfalls ({len(self.shortfalls)} pairs):")
            lines.extend(f"  {s}" for s in self.shortfalls[:20])
            if len(self.shortfalls) > 20:
                lines.append(f"  ... and {len(self.shortfalls) - 20} more")
        return "\n".join(lines)


def _scan_tree(root, table, domains):
    """Sorted file lists per (domain, class); missing entries are collected."""
    files = {}
    gaps = []
    for domain in domains:
        ddir = os.path.join(root, domain)
        if not os.path.isdir(ddir):
            gaps.append(f"missing domain directory: {domain}")
            continue
        for cls in table.class_names:
            cdir = os.path.join(ddir, cls)
            if not os.path.isdir(cdir):
                gaps.append(f"missing class directory: {domain}/{cls}")
                continue
            names = sorted(
                f for f in os.listdir(cdir)
                if f.lower().endswith(IMAGE_EXTENSIONS)
            )
            if not names:
                gaps.append(f"no images under {domain}/{cls}")
                continue
            files[(domain, cls)] = [f"{domain}/{cls}/{f}" for f in names]
    return files, gaps


def _load_official_splits(root, domain):
    """Return set of test relpaths if the official split lists exist."""
    train_list = os.path.join(root, f"{domain}_train.txt")
    test_list = os.path.join(root, f"{domain}_test.txt")
    if not (os.path.exists(train_list) and os.path.exists(test_list)):
        return None
    test_paths = set()
    with open(test_list) as f:
        for line in f:
            parts = line.split()
            if parts:
                test_paths.add(parts[0])
    return test_paths


def _quotas(total, pairs):
    """Per-pair targets: total split as evenly as the 600 pairs allow."""
    base, rem = divmod(total, len(pairs))
    return {pair: base + (1 if i < rem else 0) for i, pair in enumerate(pairs)}


def build_dn4il(root, table=None, policy=None, seed=0, out_path=None):
    """Sample the subset and return (manifest rows, report).

    When ``out_path`` is given the manifest file is written as well; the
    output is byte-identical across runs with the same inputs and seed.
    """
    table = table or ClassTable()
    policy = policy or BalancePolicy()
    problems = table.self_check()
    if problems:
        raise DataError("class table invalid: " + "; ".join(problems))

    files, gaps = _scan_tree(root, table, DOMAINS)
    if gaps:
        raise DataError("raw tree incomplete:\n  " + "\n  ".join(gaps))

    rng = np.random.default_rng(seed)
    pairs = [(d, c) for d in DOMAINS for c in table.class_names]

    split_files = {"train": {}, "test": {}}
    for domain in DOMAINS:
        official_test = _load_official_splits(root, domain)
        for cls in table.class_names:
            pool = files[(domain, cls)]
            if official_test is not None:
                te = [p for p in pool if p in official_test]
                tr = [p for p in pool if p not in official_test]
            else:
                pool = list(pool)
                rng.shuffle(pool)
                n_test = max(1, int(round(len(pool) * policy.test_fraction)))
                te = sorted(pool[:n_test])
                tr = sorted(pool[n_test:])
            split_files["train"][(domain, cls)] = tr
            split_files["test"][(domain, cls)] = te

    report = BuildReport()
    chosen = {"train": {}, "test": {}}
    for split, total in (("train", policy.train_total), ("test", policy.test_total)):
        quota = _quotas(total, pairs)
        taken = {}
        for pair in pairs:
            pool = split_files[split][pair]
            want = quota[pair]
            if len(pool) < want:
                report.shortfalls.append(
                    f"{split} {pair[0]}/{pair[1]}: wanted {want}, have only {len(pool)}"
                )
            take = min(want, len(pool))
            idx = rng.choice(len(pool), size=take, replace=False) if take < len(pool) \
                else np.arange(len(pool))
            taken[pair] = sorted(pool[i] for i in idx)
        deficit = total - sum(len(v) for v in taken.values())
        # deterministic round-robin backfill from pairs with spare samples
        while deficit > 0:
            progressed = False
            for pair in pairs:
                if deficit == 0:
                    break
                pool = split_files[split][pair]
                if len(taken[pair]) < len(pool):
                    current = set(taken[pair])
                    extra = next(p for p in pool if p not in current)
                    taken[pair].append(extra)
                    taken[pair].sort()
                    deficit -= 1
                    progressed = True
            if not progressed:
                report.shortfalls.append(
                    f"{split}: total shortfall of {deficit} rows (raw data exhausted)"
                )
                break
        chosen[split] = taken
        report.totals[split] = sum(len(v) for v in taken.values())
        for pair, sel in taken.items():
            report.per_pair[(split,) + pair] = len(sel)

    rows = []
    for split in ("train", "test"):
        for (domain, cls), sel in chosen[split].items():
            d_id = DOMAINS.index(domain)
            c_id = table.class_to_id[cls]
            rows.extend((rel, c_id, d_id, split) for rel in sel)
    rows.sort()

    if out_path is not None:
        write_manifest(out_path, rows, table.class_names, DOMAINS, policy.image_size)
    return rows, report


@dataclass
class ValidationReport:
    passed: bool
    problems: list
    domain_counts: dict
    imbalance: dict

    def summary(self):
        lines = ["manifest validation: " + ("PASS" if self.passed else "FAIL")]
        for (domain, split), n in sorted(self.domain_counts.items()):
            lines.append(f"  {domain:<10} {split:<5} {n}")
        for split, factor in sorted(self.imbalance.items()):
            lines.append(f"  worst per-class deviation from domain mean ({split}): {factor:.2f}x")
        lines.extend("  problem: " + p for p in self.problems)
        return "\n".join(lines)


def validate_manifest(path, table=None, root=None):
    """Check manifest invariants, count rows, and report imbalance."""
    table = table or ClassTable()
    try:
        rows, class_names, domain_names, _ = read_manifest_rows(path)
    except ManifestError:
        raise
    problems = []
    if class_names != table.class_names:
        problems.append("manifest class list differs from the class table")

    seen_paths = {}
    domain_counts = {}
    pair_counts = {}
    for i, (rel, c_id, d_id, split) in enumerate(rows):
        if not 0 <= c_id < len(class_names):
            problems.append(f"row {i}: class id {c_id} out of range ({rel})")
            continue
        if not 0 <= d_id < len(domain_names):
            problems.append(f"row {i}: domain id {d_id} out of range ({rel})")
            continue
        if class_names[c_id] not in table.class_to_id:
            problems.append(f"row {i}: class {class_names[c_id]!r} not in class table ({rel})")
        if rel in seen_paths:
            problems.append(f"row {i}: duplicate path {rel} (also in {seen_paths[rel]})")
        seen_paths[rel] = split
        domain_counts[(domain_names[d_id], split)] = \
            domain_counts.get((domain_names[d_id], split), 0) + 1
        pair_counts[(split, d_id, c_id)] = pair_counts.get((split, d_id, c_id), 0) + 1
        if root is not None and not os.path.exists(os.path.join(root, rel)):
            problems.append(f"row {i}: missing file {rel}")

    for split in ("train", "test"):
        for d_id, domain in enumerate(domain_names):
            present = [pair_counts.get((split, d_id, c), 0) for c in range(len(class_names))]
            missing = [class_names[c] for c, n in enumerate(present) if n == 0]
            if missing:
                problems.append(
                    f"{split}/{domain}: {len(missing)} classes absent (e.g. {missing[:3]})"
                )

    imbalance = {}
    for split in ("train", "test"):
        worst = 0.0
        for d_id in range(len(domain_names)):
            counts = np.array([pair_counts.get((split, d_id, c), 0)
                               for c in range(len(class_names))], dtype=float)
            if counts.sum() == 0:
                continue
            mean = counts.mean()
            if mean > 0:
                worst = max(worst, float(np.abs(counts - mean).max() / mean))
        imbalance[split] = worst

    return ValidationReport(not problems, problems, domain_counts, imbalance)


def materialize(manifest_path, src_root, dest_root, image_size=None):
    """Resize every referenced image into a packed directory tree."""
    from PIL import Image

    rows, _, _, size = read_manifest_rows(manifest_path)
    size = image_size or size
    for rel, _, _, _ in rows:
        src = os.path.join(src_root, rel)
        dst = os.path.join(dest_root, rel)
        os.makedirs(os.path.dirname(dst), exist_ok=True)
        try:
            with Image.open(src) as im:
                im.convert("RGB").resize((size, size), Image.BILINEAR).save(dst)
        except OSError as e:
            raise DataError(f"cannot materialize {src}: {e}") from e
    return len(rows)
