#!/usr/bin/env python3
"""Time the noise-lock loop on the numba kernel and the pure-numpy fallback.

Both backends run the same config and seed, and the traces must agree
bitwise. The last row runs a fresh interpreter with OPOLAB_DISABLE_NUMBA=1
to show which backend the flag selects by default.

Usage:
    python3 benchmarks/bench_lockloop.py
    python3 benchmarks/bench_lockloop.py --duration 10 --repeat 3
"""
import argparse
import math
import os
import subprocess
import sys
import time

import numpy as np

from opolab import _accel
from opolab.lockloop import LockConfig, resonance_drift, simulate_lock

# Slow phase drift so both backends exercise the disturbance path.
DRIFT = (resonance_drift(hold_time=1.0, ramp=0.1, fade_time=0.5)[0], 0)
FIELDS = ("theta_total", "error_signal", "control_output", "theta_disturbance")


def run(config, backend, repeat):
    best = math.inf
    trace = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        trace = simulate_lock(config, *DRIFT, backend=backend)
        best = min(best, time.perf_counter() - t0)
    return best, trace


def flagged_default():
    env = dict(os.environ, OPOLAB_DISABLE_NUMBA="1")
    code = "from opolab import _accel; print('numba' if _accel.USE_NUMBA else 'numpy')"
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    return out.stdout.strip()


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--duration", type=float, default=2.0, help="simulated seconds")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    config = LockConfig(analysis_variance_pair=(4.0, 0.25), duration=args.duration,
                        initial_phase=math.pi / 2 + 0.3)
    print(f"lock loop: {config.n_steps} steps ({args.duration:g} s at dt={config.dt:g} s), best of {args.repeat}")

    results = {}
    if _accel.NUMBA_AVAILABLE:
        # First call pays for compilation (or cache load); keep it out of the timing.
        t0 = time.perf_counter()
        simulate_lock(LockConfig(analysis_variance_pair=(4.0, 0.25), duration=0.01), backend="numba")
        print(f"  numba warm-up   {time.perf_counter() - t0:8.3f} s")
        results["numba"] = run(config, "numba", args.repeat)
    results["numpy"] = run(config, "numpy", args.repeat)

    for name, (seconds, _) in results.items():
        rate = config.n_steps / seconds / 1e6
        print(f"  {name:<14}  {seconds:8.3f} s   {rate:7.2f} Msteps/s")

    if len(results) == 2:
        a, b = results["numba"][1], results["numpy"][1]
        same = all(np.array_equal(getattr(a, f), getattr(b, f)) for f in FIELDS)
        print(f"  speed-up        {results['numpy'][0] / results['numba'][0]:8.1f}x")
        print(f"  bitwise equal   {same}")
    else:
        print("  numba not installed; fallback only")
    print(f"  OPOLAB_DISABLE_NUMBA=1 default backend: {flagged_default()}")

if __name__ == "__main__":
    main()
