"""Timing comparison of the pure-python and compiled kernel backends.

Measures the fused follower kernel in isolation on both modules and
then times full simulations in subprocesses, one per backend, since the
engine binds its backend once at import.

Run from the repository root:

    python3 benchmarks/bench_backends.py
    python3 benchmarks/bench_backends.py --states 500000 --duration 280
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

import platoonflow._kernels_py as kernels_py

try:
    import platoonflow._kernels_cy as kernels_cy
except ImportError:
    kernels_cy = None

BOX = (20.0, 35.0, -4.0, 3.0, 5.0, 0.01, 1.0)  # v_min..gamma kernel tail
DRAG = (4e-4, 0.6, 0.08)


def draw_states(n, seed=0):
    rng = np.random.default_rng(seed)
    states = []
    for _ in range(n):
        v = float(rng.uniform(20.0, 35.0))
        v_hat = float(rng.uniform(-10.0, v - 20.0))
        p_hat = float(rng.uniform(-120.0, -1.0))
        pred = float(rng.uniform(-4.0, 3.0))
        deadline = bool(rng.uniform() < 0.3)
        states.append((v, p_hat, v_hat, pred, deadline))
    return states


def time_follower_kernel(mod, states):
    fn = mod.follower_decision
    v_min, v_max, a_min, a_max, delta, eps_g, gamma = BOX
    c0, c1, c2 = DRAG
    start = time.perf_counter()
    for v, p_hat, v_hat, pred, deadline in states:
        fn(v, p_hat, v_hat, pred, deadline, v_min, v_max, a_min, a_max,
           delta, eps_g, gamma, c0, c1, c2)
    return time.perf_counter() - start


def time_full_run(backend, duration, repeats):
    code = (
        "import time\n"
        "from platoonflow import SimParams, run\n"
        f"params = SimParams(duration={duration!r}, seed=0)\n"
        "start = time.perf_counter()\n"
        "run(params)\n"
        "print(time.perf_counter() - start)\n"
    )
    env = dict(os.environ, PLATOONFLOW_BACKEND=backend)
    best = float("inf")
    for _ in range(repeats):
        out = subprocess.run([sys.executable, "-c", code], env=env,
                             capture_output=True, text=True, check=True)
        best = min(best, float(out.stdout))
    return best


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--states", type=int, default=200_000,
                        help="kernel calls per backend (default 200000)")
    parser.add_argument("--duration", type=float, default=140.0,
                        help="simulated seconds for the full run")
    parser.add_argument("--repeats", type=int, default=3,
                        help="full-run repetitions, best time kept")
    args = parser.parse_args(argv)

    states = draw_states(args.states)
    t_py = time_follower_kernel(kernels_py, states)
    rate_py = args.states / t_py
    print(f"follower kernel, python : {t_py:8.3f} s "
          f"({rate_py:,.0f} calls/s)")
    if kernels_cy is not None:
        t_cy = time_follower_kernel(kernels_cy, states)
        rate_cy = args.states / t_cy
        print(f"follower kernel, cython : {t_cy:8.3f} s "
              f"({rate_cy:,.0f} calls/s, {t_py / t_cy:.1f}x)")
    else:
        print("follower kernel, cython : not built")

    t_run_py = time_full_run("python", args.duration, args.repeats)
    print(f"full run,       python : {t_run_py:8.3f} s "
          f"for {args.duration:g} simulated seconds")
    if kernels_cy is not None:
        t_run_cy = time_full_run("cython", args.duration, args.repeats)
        print(f"full run,       cython : {t_run_cy:8.3f} s "
              f"({t_run_py / t_run_cy:.1f}x)")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
