"""Time the compiled kernel against the pure-Python loop on identical inputs.

    python benchmarks/bench_kernel.py [--steps N] [--repeat R] [--preset NAME]

Prints per-backend wall time and the speed-up, and checks that both backends
produced the same trace.
"""

from __future__ import annotations

import argparse
import dataclasses
import statistics
import sys
import time

import numpy as np

from swarminspect import kernel
from swarminspect.engine import run_simulation
from swarminspect.params import PRESETS, SimConfig


def timed(params, cfg, backend, repeat):
    times, trace = [], None
    for _ in range(repeat):
        t0 = time.perf_counter()
        trace = run_simulation(params, cfg, backend)
        times.append(time.perf_counter() - t0)
    return statistics.median(times), trace


def same(a, b) -> bool:
    for f in dataclasses.fields(a):
        va, vb = getattr(a, f.name), getattr(b, f.name)
        if isinstance(va, np.ndarray) and not np.array_equal(va, vb):
            return False
    return a.events == b.events


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=50_000)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--preset", default="empirical", choices=sorted(PRESETS))
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args(argv)

    if "compiled" not in kernel.BACKENDS:
        print("compiled extension not built; nothing to compare", file=sys.stderr)
        return 1
    params = PRESETS[args.preset]
    cfg = SimConfig(T_max=args.steps, seed=args.seed)
    t_py, tr_py = timed(params, cfg, "python", args.repeat)
    t_c, tr_c = timed(params, cfg, "compiled", args.repeat)
    print(f"preset={args.preset} steps={args.steps} robots={cfg.n_robots}")
    print(f"python    {t_py:8.3f} s  ({args.steps / t_py:,.0f} steps/s)")
    print(f"compiled  {t_c:8.3f} s  ({args.steps / t_c:,.0f} steps/s)")
    print(f"speed-up  {t_py / t_c:8.1f}x")
    ok = same(tr_py, tr_c)
    print(f"identical traces: {ok}")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
