"""Compare the numba and numpy geometry-kernel backends.

Run: python benchmarks/bench_kernels.py
The active backend is chosen at import time; THETABSDE_DISABLE_NUMBA=1
forces the numpy path. This script times both implementations directly,
regardless of which one the package selected.
"""

import time

import numpy as np

from thetabsde import _kernels


def bench(fn, *args, repeat=5):
    fn(*args)  # warm-up (jit compile)
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    rng = np.random.default_rng(0)
    n, d, k = 200_000, 6, 64
    P = rng.standard_normal((n, d)) * 2.0
    lower, upper = -np.ones(d), np.ones(d)
    center, radius = np.zeros(d), 1.0
    pts = rng.standard_normal((k, d))

    pairs = [
        ("box_project", (_kernels.numpy_box_project, (P, lower, upper))),
        ("ball_project", (_kernels.numpy_ball_project, (P, center, radius))),
        ("cloud_nearest", (_kernels.numpy_cloud_nearest, (P, pts))),
    ]
    print(f"active backend: {_kernels.BACKEND}   (n={n}, dim={d}, cloud={k})")
    print(f"{'kernel':<16}{'numpy (ms)':>12}{'numba (ms)':>12}{'speedup':>10}")
    for name, (np_fn, args) in pairs:
        t_np = bench(np_fn, *args) * 1e3
        if _kernels.BACKEND == "numba":
            t_nb = bench(getattr(_kernels, name), *args) * 1e3
            print(f"{name:<16}{t_np:>12.2f}{t_nb:>12.2f}{t_np / t_nb:>9.1f}x")
        else:
            print(f"{name:<16}{t_np:>12.2f}{'n/a':>12}{'n/a':>10}")


if __name__ == "__main__":
    main()
