"""Time the numba kernels against their numpy fallbacks.

    python benchmarks/bench_kernels.py [--repeat 5]

Each kernel is checked for identical output before timing. The numba
functions are called once first so JIT compilation is not counted.
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from cssgr import kernels


def cases(rng):
    x = rng.standard_normal((16, 8, 32))  # a training batch of node states
    valid = rng.random((16, 8)) < 0.9
    a = rng.integers(3, 64, size=40)
    b = rng.integers(3, 64, size=40)
    return [
        ("threshold_adjacency (16x8x32)",
         lambda: kernels.threshold_adjacency_numpy(x, 0.5, valid),
         lambda: kernels._threshold_adjacency_nb(x, 0.5, valid)),
        ("lcs_length (40 vs 40)",
         lambda: kernels.lcs_length_numpy(a, b),
         lambda: int(kernels._lcs_length_nb(a, b))),
    ]


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--number", type=int, default=200)
    args = ap.parse_args(argv)
    if kernels.njit is None:
        raise SystemExit("numba is not installed; nothing to compare")
    print(f"{'kernel':<32}{'numpy us':>12}{'numba us':>12}{'speedup':>10}")
    for name, np_fn, nb_fn in cases(np.random.default_rng(0)):
        assert np.array_equal(np_fn(), nb_fn()), name
        t_np = min(timeit.repeat(np_fn, number=args.number, repeat=args.repeat)) / args.number * 1e6
        t_nb = min(timeit.repeat(nb_fn, number=args.number, repeat=args.repeat)) / args.number * 1e6
        print(f"{name:<32}{t_np:>12.1f}{t_nb:>12.1f}{t_np / t_nb:>9.1f}x")


if __name__ == "__main__":
    main()
