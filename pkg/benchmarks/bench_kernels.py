"""Compare the numba and numpy backends of the propagator hot loops.

Times each elementwise kernel on both code paths at a few grid sizes, then
times a short end-to-end ``evolve`` in two subprocesses, one with
``LOSSYSPDC_NO_NUMBA=1``.  Run with ``python benchmarks/bench_kernels.py``.
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from lossyspdc import kernels

EVOLVE_SNIPPET = """
import time
from lossyspdc import PhysicalParams, build_grid, evolve, make_plan, kernels
p = PhysicalParams(l_ov=0.1, l_d=3.0, l_a=0.2, l_total=0.1)
grid = build_grid({n}, 30.0)
plan = make_plan(0.1, 0.1 / {steps}, trace_every=10**9)
evolve(p, grid, make_plan(0.002, 0.001, trace_every=10**9))  # warm-up / JIT
t = time.perf_counter(); evolve(p, grid, plan); print(kernels.BACKEND, time.perf_counter() - t)
"""


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def bench_kernels(sizes, repeat):
    rng = np.random.default_rng(0)
    print(f"{'kernel':<14}{'n':>6}{'numpy [ms]':>13}{'numba [ms]':>13}{'speedup':>10}")
    for n in sizes:
        g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        f = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        e = np.exp(1j * rng.standard_normal(n))
        grow = np.exp(0.01 * rng.random(n))
        shrink = 1.0 / grow
        src = rng.random(n)
        cases = {
            "apply_phase": (kernels._apply_phase_numpy, kernels._apply_phase_numba, (e,)),
            "couple": (kernels._couple_numpy, kernels._couple_numba, (grow, shrink, 0.999, src, src)),
        }
        for name, (np_fn, nb_fn, extra) in cases.items():
            a, b = g.copy(), f.copy()
            t_np = best_of(lambda: np_fn(a, b, *extra), repeat)
            if kernels.HAVE_NUMBA:
                nb_fn(g.copy(), f.copy(), *extra)  # compile outside the timing
                a, b = g.copy(), f.copy()
                t_nb = best_of(lambda: nb_fn(a, b, *extra), repeat)
                print(f"{name:<14}{n:>6}{1e3 * t_np:>13.3f}{1e3 * t_nb:>13.3f}{t_np / t_nb:>10.2f}")
            else:
                print(f"{name:<14}{n:>6}{1e3 * t_np:>13.3f}{'n/a':>13}{'':>10}")
        t_np = best_of(lambda: kernels._edge_fraction_numpy(f, n // 20), repeat)
        if kernels.HAVE_NUMBA:
            kernels._edge_fraction_numba(f, n // 20)
            t_nb = best_of(lambda: kernels._edge_fraction_numba(f, n // 20), repeat)
            print(f"{'edge_fraction':<14}{n:>6}{1e3 * t_np:>13.3f}{1e3 * t_nb:>13.3f}{t_np / t_nb:>10.2f}")


def bench_evolve(n, steps):
    print(f"\nevolve: n={n}, {steps} steps")
    for flag in ("0", "1"):
        env = dict(os.environ, LOSSYSPDC_NO_NUMBA=flag)
        out = subprocess.run([sys.executable, "-c", EVOLVE_SNIPPET.format(n=n, steps=steps)],
                             env=env, capture_output=True, text=True, check=True)
        backend, secs = out.stdout.split()
        print(f"  {backend:<6} {float(secs):8.3f} s  ({1e3 * float(secs) / steps:.2f} ms/step)")


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[128, 256, 512])
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--evolve-n", type=int, default=256)
    ap.add_argument("--evolve-steps", type=int, default=200)
    args = ap.parse_args(argv)
    print(f"backend selected at import: {kernels.BACKEND}")
    bench_kernels(args.sizes, args.repeat)
    bench_evolve(args.evolve_n, args.evolve_steps)


if __name__ == "__main__":
    main()
