#!/usr/bin/env python3
"""Benchmark the RK4 kernels: numba JIT vs the pure-Python fallback.

Spawns itself twice (once per mode, selected through HIFBENCH_PURE_NUMPY)
and reports per-kernel wall times and the speedup. Usage:

    python benchmarks/bench_kernels.py [--seconds 2.0]
"""

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np

FLAG = "HIFBENCH_PURE_NUMPY"


def bench_inner(sim_seconds: float) -> dict:
    from hifbench._kernels import (USING_NUMBA, arc_circuit_rk4,
                                   net_coupled_rk4, net_injected_rk4)

    fs = 6400.0
    oversample = 10
    h = 1.0 / (oversample * fs)
    n_out = int(sim_seconds * fs) + 1
    t_half = np.arange(2 * oversample * (n_out - 1) + 1) * (0.5 * h)
    u = 8165.0 * np.sin(2 * np.pi * 50.0 * t_half)
    inj = np.sin(2 * np.pi * 50.0 * t_half) + 0.4 * np.sin(6 * np.pi * 50.0 * t_half)

    def timed(fn, *args):
        fn(*args)  # warm-up (JIT compilation in numba mode)
        best = float("inf")
        for _ in range(3):
            t0 = time.perf_counter()
            fn(*args)
            best = min(best, time.perf_counter() - t0)
        return best

    results = {
        "numba": USING_NUMBA,
        "sim_seconds": sim_seconds,
        "internal_steps": oversample * (n_out - 1),
        "arc_circuit_rk4": timed(arc_circuit_rk4, u, n_out, oversample, h,
                                 100.0, 2000.0, 300.0, np.log(300.0),
                                 np.log(1e-2), np.log(1e7)),
        "net_injected_rk4": timed(net_injected_rk4, inj, n_out, oversample, h,
                                  0.0965, 1e-4, 2e-4, 0.0, 0.0),
        "net_coupled_rk4": timed(net_coupled_rk4, u, n_out, oversample, h,
                                 0.0965, 1e-4, 2e-4, 1200.0, 4000.0, 6.0,
                                 np.log(500.0), np.log(1e-2), np.log(1e7)),
    }
    return results


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seconds", type=float, default=2.0,
                        help="simulated seconds per kernel call")
    parser.add_argument("--inner", action="store_true", help=argparse.SUPPRESS)
    args = parser.parse_args()

    if args.inner:
        print(json.dumps(bench_inner(args.seconds)))
        return 0

    runs = {}
    for label, pure in (("numba", False), ("pure", True)):
        env = dict(os.environ)
        if pure:
            env[FLAG] = "1"
        else:
            env.pop(FLAG, None)
        out = subprocess.run(
            [sys.executable, os.path.abspath(__file__), "--inner",
             "--seconds", str(args.seconds)],
            env=env, capture_output=True, text=True)
        if out.returncode != 0:
            print(out.stderr, file=sys.stderr)
            return 1
        runs[label] = json.loads(out.stdout)

    steps = runs["numba"]["internal_steps"]
    print(f"RK4 kernels over {args.seconds:g} simulated seconds "
          f"({steps} internal steps each):\n")
    print(f"{'kernel':>20} {'numba':>12} {'pure python':>14} {'speedup':>9}")
    for kernel in ("arc_circuit_rk4", "net_injected_rk4", "net_coupled_rk4"):
        fast = runs["numba"][kernel]
        slow = runs["pure"][kernel]
        print(f"{kernel:>20} {fast * 1e3:>10.2f}ms {slow * 1e3:>12.1f}ms "
              f"{slow / fast:>8.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
