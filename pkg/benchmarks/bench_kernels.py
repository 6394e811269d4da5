#!/usr/bin/env python3
"""Compare the compiled kernel extension against the pure-NumPy fallback.

Times the per-call kernels and a full descent run on one synthetic instance,
then prints best-of-N wall times and the speedup ratio.  Run from a checkout:

    python3 benchmarks/bench_kernels.py --d 64 --m 448 --iters 2000
"""

import argparse
import time

import numpy as np

from affinepr._kernels import _numpy as numpy_backend
from affinepr.model import generate_instance
from affinepr.rng import RngSpec

try:
    from affinepr._kernels import _core as compiled_backend
except ImportError:
    compiled_backend = None


def best_of(repeat, fn, *args):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def run(d, m, iters, repeat, seed):
    inst = generate_instance(d, m, bias_lambda=5.0, sigma=0.0, rng=RngSpec(seed))
    gen = RngSpec(seed + 1).generator()
    z = inst.x + 0.1 * (gen.standard_normal(d) + 1j * gen.standard_normal(d))
    v = gen.standard_normal(d) + 1j * gen.standard_normal(d)
    z0 = 0.5 * inst.x
    A, b, y, x = inst.A, inst.b, inst.y, inst.x

    backends = [("numpy", numpy_backend)]
    if compiled_backend is not None:
        backends.append(("compiled", compiled_backend))
    else:
        print("note: compiled extension not importable; timing the fallback only")

    cases = [
        ("loss", lambda k: k.loss(A, b, y, z)),
        ("loss_gradient", lambda k: k.loss_gradient(A, b, y, z)),
        ("quadform", lambda k: k.quadform(A, b, y, z, v)),
        ("hessian_matvec", lambda k: k.hessian_matvec(A, b, y, z, v)),
        ("descent", lambda k: k.descent(A, b, y, z0, x, 1e-6, iters, 0.0, 0.0)),
    ]

    print(f"d={d} m={m} iters={iters} repeat={repeat} seed={seed}")
    header = f"{'kernel':<16}" + "".join(f"{name:>14}" for name, _ in backends)
    if len(backends) == 2:
        header += f"{'speedup':>10}"
    print(header)
    for case_name, call in cases:
        times = [best_of(repeat, call, k) for _, k in backends]
        row = f"{case_name:<16}" + "".join(f"{t * 1e3:>12.3f}ms" for t in times)
        if len(times) == 2 and times[1] > 0:
            row += f"{times[0] / times[1]:>9.1f}x"
        print(row)

    # sanity: the two implementations are interchangeable
    if compiled_backend is not None:
        ref = numpy_backend.loss(A, b, y, z)
        got = compiled_backend.loss(A, b, y, z)
        assert abs(ref - got) <= 1e-12 * (1 + abs(ref)), (ref, got)


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--d", type=int, default=64)
    ap.add_argument("--m", type=int, default=448)
    ap.add_argument("--iters", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    run(args.d, args.m, args.iters, args.repeat, args.seed)


if __name__ == "__main__":
    main()
