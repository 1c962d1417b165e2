"""Time the compiled and numpy grid KDE kernels on the experiment workloads.

    python benchmarks/bench_kde.py [--repeat 3]
"""
import argparse
import time

import numpy as np

from kernelkernel import _backend
from kernelkernel.density import auto_grid, SampleBag
from kernelkernel.kernels import FAMILY_CODES

WORKLOADS = [
    # name, k, points per bag, cells per dim, bandwidth
    ("beta 1-d, b=0.1", 1, 500, 4096, 0.1),
    ("beta 1-d, b=0.5", 1, 500, 4096, 0.5),
    ("gauss 2-d, b=0.2", 2, 500, 64, 0.2),
    ("gauss 2-d, b=0.8", 2, 500, 64, 0.8),
]


def _time(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()
    rng = np.random.default_rng(0)
    code = FAMILY_CODES["triangle"]
    print(f"{'workload':<20} {'numpy [ms]':>12} {'compiled [ms]':>14} {'speedup':>9}")
    for name, k, n, cells, b in WORKLOADS:
        pts = rng.beta(5, 3, (n, k)) if k == 1 else rng.normal(size=(n, k))
        grid = auto_grid([SampleBag(pts)], cells, 1.0, 1.0)
        call = (pts, b, code, np.array(grid.lo), grid.step, np.array(grid.cells))
        t_py = _time(lambda: _backend.kde_grid_py(*call), args.repeat)
        if _backend.kde_grid_ext is None:
            print(f"{name:<20} {t_py * 1e3:>12.2f} {'n/a':>14} {'':>9}")
            continue
        t_ext = _time(lambda: _backend.kde_grid_ext(*call), args.repeat)
        print(f"{name:<20} {t_py * 1e3:>12.2f} {t_ext * 1e3:>14.2f} {t_py / t_ext:>8.1f}x")


if __name__ == "__main__":
    main()
