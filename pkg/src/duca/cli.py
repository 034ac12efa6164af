"""Command-line entry point.

Subcommands: ``train`` (run an experiment config or preset), ``report``
(comparison table + plot-ready CSVs from saved records), ``dn4il build`` /
``dn4il validate`` (subset construction), ``shape-preview`` (write the
edge-magnitude transform of one image). Exit codes: 0 success, 1 config
error, 2 data error, 3 training divergence.
"""

import argparse
import csv
import os
import sys

import numpy as np

from .dn4il import BalancePolicy, build_dn4il, materialize, validate_manifest
from .errors import ConfigurationError, DataError, TrainingDivergenceError
from .presets import PRESETS
from .runner import compare, format_table, load_config, load_records, normalize_config, run
from .shape_filter import ShapeConfig, extract_shape


def _cmd_train(args):
    if args.config:
        cfg = load_config(args.config)
    elif args.preset:
        cfg = normalize_config({"preset": args.preset})
    else:
        raise ConfigurationError("train needs --config FILE or --preset NAME")
    if args.out:
        cfg["out_dir"] = args.out
    if args.seeds:
        cfg["seeds"] = [int(s) for s in args.seeds.split(",")]
    if args.save_checkpoints:
        cfg["save_checkpoints"] = True
    record = run(cfg, name=args.name)
    means = np.mean([s["metrics"]["average_accuracy"] for s in record["per_seed"]])
    print(f"{record['name']}: class-il {means:.2f} over {len(record['per_seed'])} seeds")
    print(f"record written under {cfg['out_dir']}")
    return 0


def _cmd_report(args):
    records = load_records(args.records)
    rows = compare(records)
    print(format_table(rows))
    out_dir = args.out or args.records
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "summary.csv"), "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=list(rows[0]))
        writer.writeheader()
        writer.writerows(rows)
    with open(os.path.join(out_dir, "recency.csv"), "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["method", "seed"] + [f"task_{i}" for i in
                                              range(len(records[0]["per_seed"][0]["recency"]))])
        for rec in records:
            for s in rec["per_seed"]:
                writer.writerow([rec["method"], s["seed"]] + s["recency"])
    for rec in records:
        for s in rec["per_seed"]:
            path = os.path.join(out_dir, f"{rec['name']}-seed{s['seed']}-matrix.csv")
            np.savetxt(path, np.asarray(s["matrix"]), delimiter=",", fmt="%.4f")
    print(f"CSV reports written to {out_dir}")
    return 0


def _cmd_dn4il_build(args):
    policy = BalancePolicy(train_total=args.train_total, test_total=args.test_total,
                           image_size=args.image_size)
    rows, report = build_dn4il(args.root, policy=policy, seed=args.seed,
                               out_path=args.out)
    print(report.summary())
    print(f"manifest written to {args.out} ({len(rows)} rows)")
    if args.materialize:
        n = materialize(args.out, args.root, args.materialize)
        print(f"materialized {n} images under {args.materialize}")
    return 0


def _cmd_dn4il_validate(args):
    report = validate_manifest(args.manifest, root=args.root)
    print(report.summary())
    return 0 if report.passed else 2


def _cmd_shape_preview(args):
    from PIL import Image

    with Image.open(args.input) as im:
        rgb = np.asarray(im.convert("RGB"), dtype=np.float32) / 255.0
    batch = rgb.transpose(2, 0, 1)[None]
    out = extract_shape(batch, ShapeConfig(output_channels=3))[0]
    arr = (np.clip(out.transpose(1, 2, 0), 0, 1) * 255).astype(np.uint8)
    Image.fromarray(arr).save(args.output)
    print(f"shape image written to {args.output}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="duca",
                                     description="continual-learning experiment runner")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="run an experiment")
    p.add_argument("--config", help="YAML/JSON experiment file")
    p.add_argument("--preset", help="named preset (see --list-presets)",
                   choices=sorted(PRESETS), metavar="NAME")
    p.add_argument("--name", help="record name (default derived from config)")
    p.add_argument("--out", help="output directory override")
    p.add_argument("--seeds", help="comma-separated seed list override")
    p.add_argument("--save-checkpoints", action="store_true")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("report", help="summarize saved records")
    p.add_argument("--records", required=True, help="directory of record files")
    p.add_argument("--out", help="directory for CSV output (default: records dir)")
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("dn4il", help="dataset subset tools")
    dsub = p.add_subparsers(dest="dn4il_command", required=True)
    b = dsub.add_parser("build", help="build the subset manifest from a raw tree")
    b.add_argument("--root", required=True)
    b.add_argument("--out", required=True)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--train-total", type=int, default=67080)
    b.add_argument("--test-total", type=int, default=19464)
    b.add_argument("--image-size", type=int, default=64)
    b.add_argument("--materialize", metavar="DIR",
                   help="also write resized copies under DIR")
    b.set_defaults(func=_cmd_dn4il_build)
    v = dsub.add_parser("validate", help="check a manifest's invariants")
    v.add_argument("--manifest", required=True)
    v.add_argument("--root", help="verify referenced files exist under this root")
    v.set_defaults(func=_cmd_dn4il_validate)

    p = sub.add_parser("shape-preview", help="write the shape transform of an image")
    p.add_argument("input")
    p.add_argument("output")
    p.set_defaults(func=_cmd_shape_preview)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigurationError as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return 1
    except DataError as e:
        print(f"data error: {e}", file=sys.stderr)
        return 2
    except TrainingDivergenceError as e:
        print(f"training diverged: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
