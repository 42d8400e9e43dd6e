"""Time the compiled kernels against their numpy fallbacks.

Each backend runs in a fresh interpreter (the backend is chosen at call
time from LDLAB_DISABLE_NUMBA, but a subprocess keeps timings independent).
Output is one ``key=value`` line per measurement.

    python benchmarks/bench_kernels.py --repeat 3
"""
from __future__ import annotations

import argparse
import os
import subprocess
import sys
import time

import numpy as np


def _time(fn, repeat):
    fn()  # warm-up (numba compilation or cache load)
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def run_one(repeat: int, size: int) -> None:
    from ldlab import backend_name
    from ldlab.kernels import gas_sweep, orlicz_coordinate_steps, pair_log_sum
    from ldlab.orlicz import OrliczFunction

    rng = np.random.default_rng(0)
    x = rng.standard_normal(size)
    w = np.full(size, 1.0 / size)

    chains, n = 4, 64
    state = np.sort(rng.standard_normal((chains, n)), axis=1)
    step = np.full(chains, 0.05)
    normals = rng.standard_normal((chains, n))
    uniforms = rng.random((chains, n))

    def gas():
        s = state.copy()
        for _ in range(20):
            gas_sweep(s, step, 2.0, 2.0, float(n), 0, normals, uniforms)

    M = OrliczFunction.power(4.0)
    d, steps = 100, 2000
    coords = rng.integers(0, d, (chains, steps))
    u = rng.random((chains, steps))

    def orlicz():
        orlicz_coordinate_steps(np.zeros((chains, d)), float(d), M, coords, u)

    backend = backend_name()
    for name, fn in (("pair_log_sum", lambda: pair_log_sum(x, w)), ("gas_sweep_x20", gas),
                     ("orlicz_steps", orlicz)):
        print(f"backend={backend} kernel={name} seconds={_time(fn, repeat):.6f}", flush=True)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--size", type=int, default=4000, help="atoms for the pair log-sum")
    parser.add_argument("--child", action="store_true", help=argparse.SUPPRESS)
    args = parser.parse_args()
    if args.child:
        run_one(args.repeat, args.size)
        return
    for disable in ("0", "1"):
        env = dict(os.environ, LDLAB_DISABLE_NUMBA=disable)
        cmd = [sys.executable, __file__, "--child", "--repeat", str(args.repeat), "--size", str(args.size)]
        subprocess.run(cmd, env=env, check=True)


if __name__ == "__main__":
    main()
