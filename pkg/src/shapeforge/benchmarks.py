"""Timing harness for the hot kernels: compiled backend vs pure numpy.

Run as ``python -m shapeforge.benchmarks [--size small|large]``.  Each
kernel is warmed up first (so JIT compilation is excluded), then timed
over several repetitions; the table reports the best wall time per call
and the speedup of the compiled path.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from .kernels import numpy_impl

try:
    from .kernels import numba_impl
except ImportError:  # pragma: no cover - compiled backend unavailable
    numba_impl = None


def _time_best(fn, args, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def _cases(size: str):
    rng = np.random.default_rng(0)
    if size == "large":
        n_pts, n_tris, n_ref, n_q = 20000, 4000, 50000, 20000
    else:
        n_pts, n_tris, n_ref, n_q = 4000, 800, 12000, 4000

    pts = rng.uniform(-1, 1, (n_pts, 3))
    v0 = rng.uniform(-1, 1, (n_tris, 3))
    v1 = v0 + rng.normal(0, 0.1, (n_tris, 3))
    v2 = v0 + rng.normal(0, 0.1, (n_tris, 3))
    refs = rng.uniform(-1, 1, (n_ref, 3))
    queries = rng.uniform(-1, 1, (n_q, 3))
    direction = np.array([3.0, 2.0, 1.0]) / np.sqrt(14.0)
    tri2d = rng.uniform(-0.9, 0.9, (n_tris, 3, 2))

    return [
        ("min_sqdist_to_triangles",
         ("min_sqdist_to_triangles", (pts, v0, v1, v2))),
        ("ray_crossings",
         ("ray_crossings", (pts, direction, v0, v1, v2))),
        ("winding_numbers",
         ("winding_numbers", (pts[:2000], v0, v1, v2))),
        ("nn_sqdist (exhaustive)",
         ("nn_sqdist", (queries[:2000], refs[:2000]))),
        ("nn_sqdist_grid",
         ("nn_sqdist_grid", (queries, refs))),
        ("rasterize_triangles",
         ("rasterize_triangles", (tri2d, 256))),
    ]


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--size", choices=("small", "large"), default="small")
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args(argv)

    print(f"case sizes: {args.size}; best of {args.repeats} runs\n")
    header = f"{'kernel':28s} {'numpy':>12s} {'compiled':>12s} {'speedup':>9s}"
    print(header)
    print("-" * len(header))
    for label, (fn_name, fn_args) in _cases(args.size):
        np_fn = getattr(numpy_impl, fn_name)
        t_np = _time_best(np_fn, fn_args, args.repeats)
        if numba_impl is None:
            print(f"{label:28s} {t_np * 1e3:10.2f}ms {'n/a':>12s} {'n/a':>9s}")
            continue
        nb_fn = getattr(numba_impl, fn_name)
        nb_fn(*fn_args)  # warmup: compile outside the timed region
        t_nb = _time_best(nb_fn, fn_args, args.repeats)
        print(
            f"{label:28s} {t_np * 1e3:10.2f}ms {t_nb * 1e3:10.2f}ms "
            f"{t_np / t_nb:8.1f}x"
        )
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
