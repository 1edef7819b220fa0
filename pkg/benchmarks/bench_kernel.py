"""Compiled vs pure-Python station kernel on the baseline scenario.

    python3 benchmarks/bench_kernel.py --t-end 0.05 --repeat 3

Reports best-of-N wall time per backend, simulated steps per second and the
speed-up, and checks that both backends agree on the recorded channels.
"""

from __future__ import annotations

import argparse
import time
from dataclasses import replace

import numpy as np

from fcsim import _backend
from fcsim.control import ControllerConfig
from fcsim.scenario import baseline
from fcsim.station import simulate


def best_of(sc, backend, repeat):
    best = None
    result = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = simulate(sc, backend)
        dt = time.perf_counter() - t0
        best = dt if best is None else min(best, dt)
    return best, result


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--t-end", type=float, default=0.05, help="simulated seconds per run")
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--mode", choices=("hysteresis", "spwm", "averaged"), default="hysteresis")
    args = p.parse_args(argv)

    sc = baseline()
    if args.mode == "averaged":
        sc = replace(sc, model="averaged")
    elif args.mode == "spwm":
        sc = replace(sc, controller=ControllerConfig(mode="spwm"))
    sc = replace(sc, solver=replace(sc.solver, t_end=args.t_end))
    steps = sc.solver.n_steps

    rows = {}
    for name in _backend.AVAILABLE:
        rows[name] = best_of(sc, name, args.repeat)
        wall = rows[name][0]
        print(f"{name:>9}: {wall:8.3f} s  {steps / wall:12.0f} steps/s  ({steps} steps, mode {args.mode})")

    if len(rows) == 2:
        (tc, rc), (tp, rp) = rows["compiled"], rows["python"]
        diff = max(float(np.max(np.abs(rc.series[c] - rp.series[c]))) for c in rc.series.channels)
        print(f"  speed-up: {tp / tc:.1f}x   max channel difference: {diff:.3g}")
    else:
        print("  compiled kernel not built; only the Python fallback was timed")


if __name__ == "__main__":
    main()
