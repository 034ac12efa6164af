"""Experiment orchestration: configs, multi-seed runs, records, tables.

One experiment per config (YAML or JSON mapping, or a named preset with
overrides). Each seed trains the full stream; the record is written
atomically (temp file + rename) so a crash never leaves a parseable but
partial result on disk.
"""

import hashlib
import json
import os
import platform
import tempfile
import time
from dataclasses import asdict

import numpy as np
import yaml

from . import __version__, kernels
from .datasets import get_dataset, resolve_data_root
from .errors import ConfigurationError, DataError
from .evaluation import average_accuracy, plasticity, recency_bias, stability
from .nn import ArchitectureSpec, save_checkpoint
from .presets import get_preset
from .shape_filter import ShapeConfig
from .streams import build_domain_stream, build_gcil, build_sequential, read_manifest, rotate_mnist
from .training import DerppConfig, DucaConfig, TrainConfig, create_trainer, train_stream

RECORD_SUFFIX = ".record.json"


def load_config(path):
    with open(path) as f:
        cfg = yaml.safe_load(f)
    if not isinstance(cfg, dict):
        raise ConfigurationError(f"{path}: config must be a mapping")
    return normalize_config(cfg)


def normalize_config(cfg):
    """Expand a preset reference and check required keys."""
    cfg = dict(cfg)
    if "preset" in cfg:
        base = get_preset(cfg.pop("preset"))
        for key, value in cfg.items():
            if isinstance(value, dict) and isinstance(base.get(key), dict):
                base[key].update(value)
            else:
                base[key] = value
        cfg = base
    for key in ("method", "arch", "dataset", "stream", "train"):
        if key not in cfg:
            raise ConfigurationError(f"config is missing the {key!r} section")
    cfg.setdefault("seeds", [0, 1, 2])
    cfg.setdefault("out_dir", "results")
    cfg.setdefault("save_checkpoints", False)
    if not cfg["seeds"]:
        raise ConfigurationError("seeds must be non-empty")
    return cfg


def config_hash(cfg):
    return hashlib.sha256(
        json.dumps(cfg, sort_keys=True, default=str).encode()
    ).hexdigest()


def build_train_config(method, train_section, input_channels):
    params = dict(train_section)
    if method == "duca":
        shape = params.pop("shape", {})
        if isinstance(shape, dict):
            shape.setdefault("output_channels", input_channels)
            shape = ShapeConfig(**shape)
        params["shape"] = shape
        return DucaConfig(**params)
    if method == "derpp":
        return DerppConfig(**params)
    if method in ("er", "sgd", "joint"):
        return TrainConfig(**params)
    raise ConfigurationError(f"unknown method {method!r}")


def build_stream(cfg):
    """Construct the task stream described by the dataset+stream sections."""
    stream_cfg = dict(cfg["stream"])
    setting = stream_cfg.pop("setting", None)
    ds_cfg = dict(cfg["dataset"])
    name = ds_cfg.pop("name", None)
    stream_seed = stream_cfg.pop("seed", 0)

    if setting == "domain_il" and (name == "dn4il" or "manifest" in ds_cfg):
        manifest_path = ds_cfg.get("manifest")
        if not manifest_path:
            raise DataError("dn4il streams need dataset.manifest pointing at a manifest file")
        root = resolve_data_root(ds_cfg.get("root"))
        manifest = read_manifest(manifest_path, root=root)
        return build_domain_stream(manifest)

    data = get_dataset(name, **ds_cfg)
    if setting in ("class_il", "task_il"):
        num_tasks = stream_cfg.pop("num_tasks")
        return build_sequential(data, num_tasks, seed=stream_seed,
                                shuffle_classes=stream_cfg.pop("shuffle_classes", False))
    if setting == "gcil":
        num_tasks = stream_cfg.pop("num_tasks")
        variant = stream_cfg.pop("variant", "uniform")
        return build_gcil(data, num_tasks, variant, stream_cfg.pop("params", None),
                          seed=stream_seed)
    if setting == "domain_il":
        if "angles" in stream_cfg:
            angles = [float(a) for a in stream_cfg.pop("angles")]
        else:
            count = int(stream_cfg.pop("rotations", 20))
            angles = list(np.linspace(0.0, 180.0, count, endpoint=False))
        manifest = rotate_mnist(data, angles)
        return build_domain_stream(manifest)
    raise ConfigurationError(f"unknown stream setting {setting!r}")


def environment_fingerprint():
    return {
        "platform": platform.platform(),
        "python": platform.python_version(),
        "numpy": np.__version__,
        "kernel_backend": kernels.backend_name(),
        "package_version": __version__,
    }


def _atomic_write_json(payload, path):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(os.path.abspath(path)),
                               suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as f:
            json.dump(payload, f, indent=1, sort_keys=True)
            f.flush()
            os.fsync(f.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def run(cfg, name=None):
    """Execute one experiment over all its seeds and persist the record."""
    cfg = normalize_config(cfg)
    method = cfg["method"]
    arch = ArchitectureSpec(**cfg["arch"])
    out_dir = cfg["out_dir"]
    name = name or f"{method}-{config_hash(cfg)[:8]}"

    stream = build_stream(cfg)
    train_cfg = build_train_config(method, cfg["train"], arch.input_shape[0])

    per_seed = []
    for seed in cfg["seeds"]:
        start = time.time()
        trainer = create_trainer(method, arch, stream.num_classes, train_cfg, seed)
        result = train_stream(trainer, stream, seed=seed, joint=(method == "joint"))
        wall = time.time() - start
        metrics = {
            "average_accuracy": average_accuracy(result.matrix),
            "task_il_accuracy": average_accuracy(result.task_il_matrix),
            "plasticity": plasticity(result.matrix),
        }
        if stream.num_tasks > 1 and result.matrix.shape[0] > 1:
            metrics["stability"] = stability(result.matrix)
        bias = recency_bias(result.log, stream.task_class_lists())
        entry = {
            "seed": seed,
            "matrix": result.matrix.tolist(),
            "task_il_matrix": result.task_il_matrix.tolist(),
            "metrics": metrics,
            "recency": bias.tolist(),
            "wall_clock_sec": wall,
        }
        if cfg.get("save_checkpoints"):
            ckpt = os.path.join(out_dir, f"{name}-seed{seed}.npz")
            os.makedirs(out_dir, exist_ok=True)
            save_checkpoint(trainer.eval_model(), ckpt)
            entry["checkpoint"] = ckpt
        per_seed.append(entry)

    record = {
        "name": name,
        "method": method,
        "config": cfg,
        "config_hash": config_hash(cfg),
        "environment": environment_fingerprint(),
        "train_config": asdict(train_cfg),
        "per_seed": per_seed,
        "created": time.strftime("%Y-%m-%dT%H:%M:%S"),
    }
    path = os.path.join(out_dir, name + RECORD_SUFFIX)
    _atomic_write_json(record, path)
    return record


def load_records(directory):
    records = []
    for fname in sorted(os.listdir(directory)):
        if fname.endswith(RECORD_SUFFIX):
            with open(os.path.join(directory, fname)) as f:
                records.append(json.load(f))
    if not records:
        raise DataError(f"no {RECORD_SUFFIX} files under {directory}")
    return records


def _stream_key(record):
    return json.dumps(
        {"dataset": record["config"]["dataset"], "stream": record["config"]["stream"]},
        sort_keys=True, default=str,
    )


def compare(records):
    """Mean +/- std per method; records must share the stream definition."""
    if not records:
        raise ConfigurationError("no records to compare")
    keys = {_stream_key(r) for r in records}
    if len(keys) != 1:
        raise ConfigurationError("records were produced on different streams")
    rows = []
    for rec in records:
        cls = [s["metrics"]["average_accuracy"] for s in rec["per_seed"]]
        til = [s["metrics"]["task_il_accuracy"] for s in rec["per_seed"]]
        rows.append({
            "method": rec["method"],
            "name": rec["name"],
            "class_il_mean": float(np.mean(cls)),
            "class_il_std": float(np.std(cls)),
            "task_il_mean": float(np.mean(til)),
            "task_il_std": float(np.std(til)),
            "seeds": len(cls),
        })
    rows.sort(key=lambda r: -r["class_il_mean"])
    best = rows[0]["class_il_mean"]
    for r in rows:
        r["gap_to_best"] = best - r["class_il_mean"]
    return rows


def format_table(rows):
    header = f"{'method':<10} {'class-il':>16} {'task-il':>16} {'gap':>7}  name"
    lines = [header, "-" * len(header)]
    for r in rows:
        lines.append(
            f"{r['method']:<10} "
            f"{r['class_il_mean']:>8.2f}±{r['class_il_std']:<7.2f} "
            f"{r['task_il_mean']:>8.2f}±{r['task_il_std']:<7.2f} "
            f"{r['gap_to_best']:>7.2f}  {r['name']}"
        )
    return "\n".join(lines)
