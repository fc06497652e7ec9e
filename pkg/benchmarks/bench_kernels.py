"""Time the numba kernels against their numpy fallbacks.

    python benchmarks/bench_kernels.py [--atoms 2000] [--grid 20000] [--repeat 5]

Part one calls both implementations of every kernel directly. Part two times
an end-to-end oracle call in fresh interpreters with GEVDETECT_DISABLE_NUMBA
set to 0 and 1, which is the switch users actually flip.
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from gevdetect import _kernels as K
from gevdetect.stieltjes import inverse_mp_measure

END_TO_END = (
    "import time;"
    "from gevdetect.stieltjes import inverse_mp_measure, g_threshold, support_right_edge;"
    "H = inverse_mp_measure(1/3, {atoms});"
    "g_threshold(2.0, H); t = time.perf_counter();"
    "g_threshold(2.0, H); support_right_edge(2.0, H, {grid});"
    "print(time.perf_counter() - t)"
)


def best(fn, repeat):
    fn()  # compile / warm caches
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def kernel_cases(atoms, grid):
    H = inverse_mp_measure(1 / 3, atoms)
    w = np.ascontiguousarray(H.weights, dtype=np.float64)
    loc = np.ascontiguousarray(H.locations, dtype=np.float64)
    m = -np.linspace(1e-3, 0.99, grid) / loc.max()
    t = np.linspace(loc.max() * 1.01, loc.max() * 10, grid)
    v = np.sort(np.random.default_rng(0).random(grid))
    return {
        "xmap_grid": ((m, w, loc, 2.0), K.xmap_grid_numba, K.xmap_grid_numpy),
        "g_grid": ((t, w, loc, 2.0), K.g_grid_numba, K.g_grid_numpy),
        "spike_image_grid": ((t, w, loc, 2.0), K.spike_image_grid_numba, K.spike_image_grid_numpy),
        "ks_sorted": ((v, v, v), K.ks_sorted_numba, K.ks_sorted_numpy),
    }


def end_to_end(atoms, grid, disable):
    env = dict(os.environ, GEVDETECT_DISABLE_NUMBA=disable)
    code = END_TO_END.format(atoms=atoms, grid=grid)
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    return float(out.stdout.strip())


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--atoms", type=int, default=2000)
    ap.add_argument("--grid", type=int, default=20_000)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--skip-end-to-end", action="store_true")
    args = ap.parse_args()

    if K.njit is None:
        sys.exit("numba is not importable; nothing to compare")
    print(f"atoms={args.atoms} grid={args.grid} repeat={args.repeat}")
    print(f"{'kernel':<18}{'numba s':>12}{'numpy s':>12}{'speedup':>10}")
    for name, (a, fast, slow) in kernel_cases(args.atoms, args.grid).items():
        tf = best(lambda: fast(*a), args.repeat)
        ts = best(lambda: slow(*a), args.repeat)
        print(f"{name:<18}{tf:>12.4f}{ts:>12.4f}{ts / tf:>9.1f}x")
    if not args.skip_end_to_end:
        tf = end_to_end(args.atoms, args.grid * 5, "0")
        ts = end_to_end(args.atoms, args.grid * 5, "1")
        print(f"{'oracle end-to-end':<18}{tf:>12.4f}{ts:>12.4f}{ts / tf:>9.1f}x")


if __name__ == "__main__":
    main()
