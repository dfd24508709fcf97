"""Compiled vs numpy kernels: wall time per call and agreement of results.

Run with ``python benchmarks/bench_kernels.py [--repeat N]``.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from latmesh import kernels
from latmesh.moments import SERIES_SWITCH, series_coefficients


def _cases():
    xs = np.arange(1, 20001, dtype=np.int64) * 50
    n = 200_000
    left = 1e6 + np.arange(n, dtype=np.float64)
    length = np.ones(n)
    counts = np.arange(n, dtype=np.float64) + 1.6e6
    z0, g0, z1, g1 = 1.6449340668482264, 1.0, -1.4603545088095868, 0.5
    coeffs = series_coefficients(g0, g1)
    rng = np.random.Generator(np.random.Philox(key=1))
    v = np.sort(rng.uniform(1, 100, 5000))
    w = v ** -0.5
    freq = rng.uniform(10, 100, 200)

    def pieces(mod):
        out = [np.empty(n) for _ in range(4)]
        mod.piece_integrals(left, length, counts, z0, z1, g0, g1, *coeffs, SERIES_SWITCH, *out)
        return out

    def cosines(mod):
        out = np.empty(len(freq))
        mod.cosine_sums(freq, np.zeros_like(freq), v, np.zeros_like(v), w, out)
        return out

    return {
        "hyperbola_counts(20k x <= 1e6)": lambda mod: mod.hyperbola_counts(1, 2, xs),
        "window_multiplicities(1e6 wide)": lambda mod: mod.window_multiplicities(1, 2, 10**6, 2 * 10**6),
        "naive_count(x=1e6)": lambda mod: mod.naive_count(1, 2, 10**6),
        "piece_integrals(2e5 pieces)": pieces,
        "cosine_sums(200 x 5000)": cosines,
    }


def _time(fn, mod, repeat: int) -> tuple[float, object]:
    best = float("inf")
    out = None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn(mod)
        best = min(best, time.perf_counter() - t)
    return best, out


def _agree(a, b) -> str:
    if isinstance(a, (int, np.integer)):
        return "exact" if a == b else "MISMATCH"
    a = a if isinstance(a, list) else [a]
    b = b if isinstance(b, list) else [b]
    worst = max(float(np.max(np.abs(np.asarray(x, float) - np.asarray(y, float)) / (1 + np.abs(np.asarray(y, float))))) for x, y in zip(a, b))
    return "exact" if worst == 0 else f"rel {worst:.1e}"


def main(argv=None) -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args(argv)
    impls = kernels.backends()
    if "cython" not in impls:
        print("compiled kernels unavailable; timing the numpy fallback only")
    print(f"{'kernel':34s} {'python s':>10s} {'cython s':>10s} {'speedup':>8s}  agreement")
    for name, fn in _cases().items():
        tp, op = _time(fn, impls["python"], args.repeat)
        if "cython" in impls:
            tc, oc = _time(fn, impls["cython"], args.repeat)
            print(f"{name:34s} {tp:10.4f} {tc:10.4f} {tp / tc:8.1f}  {_agree(oc, op)}")
        else:
            print(f"{name:34s} {tp:10.4f} {'-':>10s} {'-':>8s}")


if __name__ == "__main__":
    main()
