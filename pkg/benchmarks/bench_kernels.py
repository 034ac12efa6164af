#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallback.

Runs each hot kernel on training-shaped inputs and reports per-call time
for both paths, then times a full train step (working model + shape
learner, small-cnn, batch 32) in a subprocess per backend so the
DUCA_BACKEND env flag selects the path exactly the way production does.
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np


def timeit(fn, repeat=50, warmup=3):
    for _ in range(warmup):
        fn()
    start = time.perf_counter()
    for _ in range(repeat):
        fn()
    return (time.perf_counter() - start) / repeat


def bench_kernels(batch=32, size=32, repeat=50):
    from duca.kernels import numba_impl, numpy_impl

    rng = np.random.default_rng(0)
    x = rng.random((batch, 3, size, size), dtype=np.float32)
    feat = rng.random((batch, 32, size, size), dtype=np.float32)
    gray = rng.random((batch, size * 2, size * 2), dtype=np.float32)
    k = (np.ones((3, 3)) / 9).astype(np.float32)
    cols = numpy_impl.im2col(feat, 3, 3, 1, 1)

    cases = [
        ("im2col 3x3      ", lambda m: m.im2col(feat, 3, 3, 1, 1)),
        ("col2im 3x3      ", lambda m: m.col2im(cols, feat.shape, 3, 3, 1, 1)),
        ("maxpool 2x2     ", lambda m: m.maxpool2x2(feat)),
        ("bilinear up 2x  ", lambda m: m.bilinear_resize(x, size * 2, size * 2)),
        ("correlate3 (3x3)", lambda m: m.correlate3(gray, k)),
    ]
    print(f"{'kernel':<18} {'numpy':>10} {'numba':>10} {'speedup':>8}")
    for name, fn in cases:
        t_np = timeit(lambda: fn(numpy_impl), repeat=repeat)
        t_nb = timeit(lambda: fn(numba_impl), repeat=repeat)
        print(f"{name:<18} {t_np * 1e3:>8.3f}ms {t_nb * 1e3:>8.3f}ms {t_np / t_nb:>7.2f}x")


def _train_step_once(repeat):
    from duca.nn import ArchitectureSpec
    from duca.shape_filter import ShapeConfig
    from duca.training import DucaConfig, DucaTrainer

    trainer = DucaTrainer(
        ArchitectureSpec("small-cnn", (3, 32, 32), width=16), 10,
        DucaConfig(lr=0.05, batch_size=32, epochs_per_task=1, buffer_capacity=64,
                   augment=False, shape=ShapeConfig()),
        seed=0,
    )
    rng = np.random.default_rng(1)
    x = rng.random((32, 3, 32, 32), dtype=np.float32)
    y = rng.integers(0, 10, size=32)
    trainer.train_step(x, y)  # warm the buffer and the jit cache
    start = time.perf_counter()
    for _ in range(repeat):
        trainer.train_step(x, y)
    print(f"{(time.perf_counter() - start) / repeat:.6f}")


def bench_train_step(repeat=10):
    results = {}
    for backend in ("numpy", "numba"):
        env = dict(os.environ, DUCA_BACKEND=backend)
        out = subprocess.run(
            [sys.executable, os.path.abspath(__file__),
             "--_train-step-once", str(repeat)],
            env=env, capture_output=True, text=True, check=True,
        )
        results[backend] = float(out.stdout.strip().splitlines()[-1])
    print(f"\n{'train step (small-cnn, batch 32)':<34} numpy {results['numpy'] * 1e3:8.1f}ms"
          f"  numba {results['numba'] * 1e3:8.1f}ms"
          f"  speedup {results['numpy'] / results['numba']:.2f}x")


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--batch", type=int, default=32)
    ap.add_argument("--size", type=int, default=32)
    ap.add_argument("--repeat", type=int, default=50)
    ap.add_argument("--skip-train-step", action="store_true")
    ap.add_argument("--_train-step-once", type=int, default=None,
                    dest="train_step_once", help=argparse.SUPPRESS)
    args = ap.parse_args()
    if args.train_step_once is not None:
        _train_step_once(args.train_step_once)
        sys.exit(0)
    bench_kernels(args.batch, args.size, args.repeat)
    if not args.skip_train_step:
        bench_train_step()
