"""Time the numba and numpy kernel backends on the same collision runs.

    python benchmarks/bench_kernels.py [--repeat 3]

The first numba call compiles (or loads the on-disk cache); it is reported
separately and excluded from the steady-state timings.
"""

import argparse
import time

import numpy as np

from collision_nm import Collective, ExperimentConfig, Separate, run, run_distances
from collision_nm import backend

CASES = [
    ("separate:1", ExperimentConfig(g_ee=np.pi / 2, env_model=Separate(1)), 3000),
    ("separate:4", ExperimentConfig(g_ee=np.pi / 2, env_model=Separate(4)), 3000),
    ("collective:4", ExperimentConfig(g_ee=0.33 * np.pi / 2, env_model=Collective(4)), 3000),
]


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    nb = backend.numba_kernels()
    if nb is None:
        print("numba unavailable; only the numpy backend can be timed")
    else:
        t = time.perf_counter()
        run_distances(ExperimentConfig(g_ee=0.1, collisions=2), kernels=nb)
        run(ExperimentConfig(g_ee=0.1, collisions=2), kernels=nb)
        print(f"numba warm-up (compile or cache load): {time.perf_counter() - t:.2f} s")

    print(f"{'case':<14}{'path':<11}{'numpy s':>10}{'numba s':>10}{'speedup':>9}{'max diff':>11}")
    for name, cfg, n in CASES:
        cfg = cfg.with_(collisions=n)
        for path, fn in (("distances", run_distances), ("records", run)):
            t_np, a = best_of(lambda: fn(cfg, kernels=backend.NUMPY), args.repeat)
            if nb is None:
                print(f"{name:<14}{path:<11}{t_np:>10.3f}")
                continue
            t_nb, b = best_of(lambda: fn(cfg, kernels=nb), args.repeat)
            if path == "records":
                a = np.array([r.as_tuple() for r in a])
                b = np.array([r.as_tuple() for r in b])
            diff = float(np.max(np.abs(np.asarray(a) - np.asarray(b))))
            print(f"{name:<14}{path:<11}{t_np:>10.3f}{t_nb:>10.3f}{t_np / t_nb:>9.1f}{diff:>11.1e}")


if __name__ == "__main__":
    main()
