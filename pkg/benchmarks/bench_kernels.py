#!/usr/bin/env python3
"""Time the node-wise kernels: numba loops against the numpy fallback.

Also times one full solver step with the active backend. Run it a second time
with ``DISPFLOW_DISABLE_NUMBA=1`` to time the solver on the fallback alone.

    python benchmarks/bench_kernels.py [--repeat 200]
"""

import argparse
import time

import numpy as np

from dispflow import kernels, presets
from dispflow.covariant import FlowParams
from dispflow.grid import make_grid
from dispflow.solver import Stepper

CASES = [
    ("node_dot", 2, 7),
    ("sphere_project", 2, 7),
    ("normalize", 1, 7),
    ("cross3", 2, 3),
    ("cross7", 2, 7),
    ("sphere_curvature", 3, 7),
]


def best_time(fn, args, repeat):
    fn(*args)  # warm up (and JIT compile)
    best = float("inf")
    for _ in range(5):
        t0 = time.perf_counter()
        for _ in range(repeat):
            fn(*args)
        best = min(best, (time.perf_counter() - t0) / repeat)
    return best


def bench_kernels(sizes, repeat):
    rng = np.random.default_rng(0)
    print(f"backend: {kernels.BACKEND}")
    print(f"{'kernel':<18}{'n':>7}{'numpy us':>12}{'loop us':>12}{'speedup':>9}")
    for name, nargs, d in CASES:
        for n in sizes:
            args = [np.ascontiguousarray(rng.standard_normal((d, n))) for _ in range(nargs)]
            t_np = best_time(getattr(kernels, name + "_np"), args, repeat)
            if kernels.HAS_NUMBA:
                t_loop = best_time(getattr(kernels, name + "_loop"), args, repeat)
                print(f"{name:<18}{n:>7}{t_np * 1e6:>12.2f}{t_loop * 1e6:>12.2f}{t_np / t_loop:>9.2f}")
            else:
                print(f"{name:<18}{n:>7}{t_np * 1e6:>12.2f}{'-':>12}{'-':>9}")


def bench_step(repeat):
    print(f"\nsolver step, backend {kernels.BACKEND}")
    for target, n, params in (
        ("S2", 128, FlowParams(b=0.5)),
        ("S6", 128, FlowParams(a=0.02, b=0.5)),
        ("S6", 256, FlowParams(a=0.02, b=0.5)),
    ):
        g = make_grid(n)
        u = presets.smooth_curve(target, g)
        st = Stepper(u.target, g, params, params.time_step(g, u))
        s = np.array(u.samples)
        t = best_time(st.step, (s,), max(1, repeat // 10))
        kind = "IF-RK4" if st.stiff else "RK4"
        print(f"{target} n={n:<4} {kind:<7} {t * 1e6:10.1f} us/step")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=200)
    ap.add_argument("--sizes", type=int, nargs="+", default=[128, 256, 4096])
    args = ap.parse_args()
    bench_kernels(args.sizes, args.repeat)
    bench_step(args.repeat)


if __name__ == "__main__":
    main()
