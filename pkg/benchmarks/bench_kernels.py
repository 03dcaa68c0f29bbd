"""Compare the numba and numpy kernel backends on representative workloads.

    python benchmarks/bench_kernels.py [--repeat 3]

Each workload runs once untimed per backend (numba compilation, caches),
then ``--repeat`` timed runs; the table shows the best time and checks that
both backends return the same value.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from nfapprox import _kernels
from nfapprox.diophantine import count_approximates
from nfapprox.field import bounded_integer_coords
from nfapprox.lattice import LatticeSpec, random_theta
from nfapprox.moments import rogers_tail_sum
from nfapprox.presets import load_preset
from nfapprox.regions import WeightScheme


def _count(name, T, seed):
    K = load_preset(name)
    W = WeightScheme.equal(K.d_nu, 1, 1)
    spec = LatticeSpec(K, 1, 1, random_theta(K, 1, 1, np.random.default_rng(seed)))

    # q-candidate lists are cached after the untimed run, so timings isolate the scan
    return lambda: count_approximates(spec, W, 1.0, T)


def _box(name, house):
    K = load_preset(name)
    return lambda: int(bounded_integer_coords(K, house).shape[0])


def _rogers(cap):
    K = load_preset("Q")
    return lambda: round(rogers_tail_sum(K, 3, cap), 12)


WORKLOADS = [
    ("lattice_scan  Q   T=14", _count("Q", 14.0, 1)),
    ("lattice_scan  Qi  T=7", _count("Qi", 7.0, 2)),
    ("lattice_scan  Qsqrt2 T=8", _count("Qsqrt2", 8.0, 3)),
    ("lattice_scan  Qcubic T=6", _count("Qcubic", 6.0, 4)),
    ("box_filter    Qcubic house=60", _box("Qcubic", 60.0)),
    ("coprime_sum   Q   cap=3000", _rogers(3000)),
]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    backends = _kernels.available_backends()
    print(f"{'workload':32s}" + "".join(f"{b:>12s}" for b in backends) + "   speedup  same")
    for label, fn in WORKLOADS:
        times, values = {}, {}
        for b in backends:
            with _kernels.backend(b):
                values[b] = fn()
                best = float("inf")
                for _ in range(args.repeat):
                    t0 = time.perf_counter()
                    fn()
                    best = min(best, time.perf_counter() - t0)
                times[b] = best
        speed = times["numpy"] / times["numba"] if "numba" in times else float("nan")
        same = len(set(values.values())) == 1
        print(f"{label:32s}" + "".join(f"{times[b]:11.4f}s" for b in backends) + f"{speed:10.1f}x  {same}")


if __name__ == "__main__":
    main()
