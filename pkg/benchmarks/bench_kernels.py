"""Compare the compiled and pure-Python integration kernels.

    python benchmarks/bench_kernels.py [--repeat N]

Times one take-off plan's worth of reduced-model integration, one control
tick of plant integration and a full stance planning cycle under each
backend, and checks that both backends agree.
"""
from __future__ import annotations

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from wslip import kernels
from wslip.model import WSlipParams

PRM = WSlipParams().kernel_vector()
Y0 = np.array([0.0, 0.6, 0.05, 0.1, 0.2, -0.1])
CX = np.array([0.1, -0.2, 0.3, 0.0, 0.05])
CU = np.array([0.03, 0.1, -0.05, 0.02])


def _cases(mod):
    return {
        "rk4_stance (20 steps)": lambda: mod.rk4_stance(Y0, 0.5, 0.03, PRM, 1e-4, 20),
        "rk4_reduced_poly (800 steps)": lambda: mod.rk4_reduced_poly(
            Y0[1:3].tolist() + Y0[4:6].tolist(), CX, CU, PRM, 0.4, 800, 8),
        "stance_accel": lambda: mod.stance_accel(0.6, 0.05, 0.2, -0.1, 0.5, 0.03, PRM),
    }


def _plan_cycle_ms(pure: bool, repeat: int) -> float:
    code = (
        "import timeit\n"
        "from wslip.stance_planner import StancePlanner, StanceTask, REFERENCE_TAKEOFF_TARGET\n"
        "from wslip.model import WSlipParams\n"
        "p = WSlipParams(); pl = StancePlanner(p)\n"
        "task = StanceTask.takeoff((0, 0.6, 0, 0, 0, 0), REFERENCE_TAKEOFF_TARGET, T=0.4, p=p)\n"
        "pl.plan(task)\n"
        f"print(min(timeit.repeat(lambda: pl.plan(task), number=1, repeat={repeat})) * 1e3)\n"
    )
    env = dict(os.environ, WSLIP_PURE_PYTHON="1" if pure else "0")
    res = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True,
                         check=True)
    return float(res.stdout.strip())


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    mods = kernels.backends()
    if "cython" not in mods:
        print("compiled backend not built; only the pure-Python kernels are available")
    results = {}
    for name, mod in mods.items():
        for case, fn in _cases(mod).items():
            n = 200 if "reduced" in case else 2000
            t = min(timeit.repeat(fn, number=n, repeat=args.repeat)) / n
            results[(name, case)] = t
    print(f"{'kernel':32s} {'python [us]':>12s} {'cython [us]':>12s} {'speed-up':>9s}")
    for case in _cases(mods["python"]):
        tp = results[("python", case)] * 1e6
        tc = results.get(("cython", case))
        if tc is None:
            print(f"{case:32s} {tp:12.2f} {'-':>12s} {'-':>9s}")
        else:
            print(f"{case:32s} {tp:12.2f} {tc * 1e6:12.2f} {tp / (tc * 1e6):8.1f}x")
    if "cython" in mods:
        a = mods["python"].rk4_stance(Y0, 0.5, 0.03, PRM, 1e-4, 200)
        b = mods["cython"].rk4_stance(Y0, 0.5, 0.03, PRM, 1e-4, 200)
        print(f"backend agreement (rk4_stance, 200 steps): max |diff| = {np.max(np.abs(np.subtract(a, b))):.2e}")
    for pure in (True, False):
        label = "python" if pure else kernels.BACKEND
        if not pure and "cython" not in mods:
            break
        print(f"plan_stance cycle ({label} kernels): {_plan_cycle_ms(pure, args.repeat):.2f} ms")


if __name__ == "__main__":
    main()
