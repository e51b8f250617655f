"""Benchmark the compiled kernels against the pure-Python fallback.

Runs the same workloads in two child interpreters, one with
DOUBLEPHASE_NUMBA=1 (default, numba-compiled kernels) and one with
DOUBLEPHASE_NUMBA=0 (identical source executed as plain Python), then prints
a timing table and checks that both paths agree to near machine precision.

Usage:  python benchmarks/bench_kernels.py
"""

from __future__ import annotations

import json
import os
import subprocess
import sys

_CHILD = r"""
import json, time
import numpy as np
from doublephase._accel import NUMBA_ENABLED
from doublephase.constants import first_eigenvalue_p, invert_flux
from doublephase.fields import CoefficientField, PowerNonlinearity
from doublephase.params import ProblemParams
from doublephase.radial_solver import solve_radial_bvp

def timed(fn, repeat=3):
    best = float("inf")
    value = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        value = fn()
        best = min(best, time.perf_counter() - t0)
    return best, value

results = {"numba": bool(NUMBA_ENABLED), "workloads": {}}

# warm-up (includes JIT compilation on the numba path)
t0 = time.perf_counter()
first_eigenvalue_p(2.0, 3, 1.0)
results["warmup_s"] = time.perf_counter() - t0

t, v = timed(lambda: first_eigenvalue_p(2.0, 3, 1.0))
results["workloads"]["eigen_p2_N3"] = {"time_s": t, "value": v}

t, v = timed(lambda: first_eigenvalue_p(3.0, 4, 1.0))
results["workloads"]["eigen_p3_N4"] = {"time_s": t, "value": v}

P = ProblemParams(N=3, p=2, q=2.5)
f1 = PowerNonlinearity.constant(1.0)
a1 = CoefficientField.constant(1.0)
t, v = timed(lambda: solve_radial_bvp(P, a1, f1, grid_size=2048).shooting_value)
results["workloads"]["bvp_double_phase_torsion"] = {"time_s": t, "value": v}

w = np.linspace(-10.0, 10.0, 200001)
t, v = timed(lambda: float(np.sum(invert_flux(w, 1.5, 2.0, 2.5))))
results["workloads"]["flux_invert_200k"] = {"time_s": t, "value": v}

print(json.dumps(results))
"""


def run_child(numba_flag: str) -> dict:
    env = dict(os.environ, DOUBLEPHASE_NUMBA=numba_flag)
    out = subprocess.run(
        [sys.executable, "-c", _CHILD], env=env, capture_output=True, text=True, check=True
    )
    return json.loads(out.stdout.strip().splitlines()[-1])


def main() -> int:
    fast = run_child("1")
    slow = run_child("0")
    print(f"numba path: enabled={fast['numba']}, warmup {fast['warmup_s']:.2f}s (includes JIT)")
    print(f"fallback path: enabled={slow['numba']}, warmup {slow['warmup_s']:.2f}s")
    print()
    print(f"{'workload':<28} {'numba [s]':>12} {'fallback [s]':>14} {'speedup':>9}  agreement")
    worst = 0.0
    for name, f in fast["workloads"].items():
        s = slow["workloads"][name]
        rel = abs(f["value"] - s["value"]) / max(abs(f["value"]), 1e-300)
        worst = max(worst, rel)
        speed = s["time_s"] / max(f["time_s"], 1e-12)
        print(f"{name:<28} {f['time_s']:>12.4f} {s['time_s']:>14.4f} {speed:>8.1f}x  {rel:.2e}")
    print()
    if worst > 1e-9:
        print(f"FAIL: paths disagree beyond 1e-9 (worst {worst:.3e})")
        return 1
    print(f"paths agree (worst relative difference {worst:.3e})")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
