"""Time the numba kernels against their numpy twins, plus one end-to-end solve per backend.

    python3 benchmarks/bench_kernels.py [--repeat 5]

The end-to-end rows run in subprocesses because the backend is chosen at
import time from CFLP_DISABLE_NUMBA.
"""
import argparse
import os
import subprocess
import sys
import time

import numpy as np

from cflplcr._accel import NUMBA_ENABLED
from cflplcr.kernels import TWINS


def best_of(fn, repeat):
    fn()  # warm-up (and compile)
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def kernel_rows(repeat):
    rng = np.random.default_rng(0)
    u = rng.uniform(0.0, 5.0, 16)
    pu = rng.uniform(0.0, 5.0, 22)
    pa = rng.uniform(0.01, 0.2, 22)
    lam0 = np.array([3.0, 2.0, 1.0, 0.0])
    cases = {
        "enum_phi n=16 gamma=3": ("enum_phi", (u, 0.4, 3)),
        "lift_dp q=22 gamma=3": ("lift_dp", (pu, pa, 0.4, lam0)),
    }
    rows = []
    for label, (name, args) in cases.items():
        nb, npf = TWINS[name]
        t_np = best_of(lambda: npf(*args), repeat)
        t_nb = best_of(lambda: nb(*args), repeat) if NUMBA_ENABLED else float("nan")
        rows.append((label, t_nb, t_np))
    return rows


SOLVE_SNIPPET = (
    "import time;from cflplcr import GenConfig, generate;from cflplcr.solver import solve;"
    "inst=generate(GenConfig(m=60,n=20,gamma=3,seed=7,coord_max=300.0,fixed_cost=200.0));"
    "solve(inst,'lsi');t=time.perf_counter();solve(inst,'lsi');print(time.perf_counter()-t)"
)


def solve_row(disable):
    env = dict(os.environ)
    if disable:
        env["CFLP_DISABLE_NUMBA"] = "1"
    else:
        env.pop("CFLP_DISABLE_NUMBA", None)
    out = subprocess.run([sys.executable, "-c", SOLVE_SNIPPET], env=env, capture_output=True, text=True, check=True)
    return float(out.stdout.strip().splitlines()[-1])


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    a = ap.parse_args()
    print(f"{'case':<28} {'numba s':>12} {'numpy s':>12} {'ratio':>8}")
    for label, t_nb, t_np in kernel_rows(a.repeat):
        print(f"{label:<28} {t_nb:12.6f} {t_np:12.6f} {t_np / t_nb:8.1f}")
    t_nb, t_np = solve_row(False), solve_row(True)
    print(f"{'solve lsi m=60 n=20 g=3':<28} {t_nb:12.6f} {t_np:12.6f} {t_np / t_nb:8.1f}")


if __name__ == "__main__":
    main()
