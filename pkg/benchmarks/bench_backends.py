"""Time the numba and numpy training kernels side by side.

Runs the plain and penalized trainers on the shipped synthetic-bias
dataset at the default settings the service uses, plus a small
response-refit-sized case (the shape the session pipeline hits hundreds
of times per simulation run).

Usage: python3 benchmarks/bench_backends.py [--repeats N]
"""

import argparse
import time
from pathlib import Path

import numpy as np

from fairguide import dataset as ds
from fairguide.kernels import train_gd_numba, train_gd_numpy

REPO = Path(__file__).resolve().parent.parent


def _load(task_id, csv_name):
    task = ds.shipped_task(task_id)
    profiles = ds.load_csv(REPO / "data" / csv_name, task)
    encoded = [ds.encode(p, task) for p in profiles]
    X = np.ascontiguousarray([e.features for e in encoded])
    y = np.asarray([float(e.y) for e in encoded])
    z = np.asarray([float(e.z) for e in encoded])
    return X, y, z


def bench(fn, args, repeats):
    fn(*args)  # warmup (and numba compile)
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - start)
    return min(times)


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    X, y, z = _load("income", "synthbias.csv")
    rng = np.random.default_rng(0)
    idx = rng.permutation(len(X))[:300]
    small = (np.ascontiguousarray(X[idx]), y[idx], z[idx])

    cases = [
        ("synthbias 3000x39, plain", (X, y, z, 0.5, 2000, 1e-2, 0.0)),
        ("synthbias 3000x39, penalty", (X, y, z, 0.5, 2000, 1e-2, 2.0)),
        ("refit 300x39, plain", (*small, 0.5, 2000, 1e-2, 0.0)),
        ("refit 300x39, penalty", (*small, 0.5, 2000, 1e-2, 2.0)),
    ]
    print(f"{'case':<30} {'numpy':>10} {'numba':>10} {'speedup':>9}")
    for name, call in cases:
        t_np = bench(train_gd_numpy, call, args.repeats)
        if train_gd_numba is None:
            print(f"{name:<30} {t_np:>9.3f}s {'n/a':>10} {'n/a':>9}")
            continue
        t_nb = bench(train_gd_numba, call, args.repeats)
        w_np, b_np, _ = train_gd_numpy(*call)
        w_nb, b_nb, _ = train_gd_numba(*call)
        drift = max(np.abs(w_np - w_nb).max(), abs(b_np - b_nb))
        print(f"{name:<30} {t_np:>9.3f}s {t_nb:>9.3f}s {t_np / t_nb:>8.1f}x"
              f"   (max param drift {drift:.1e})")


if __name__ == "__main__":
    main()
