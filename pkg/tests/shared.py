"""Cached batches shared between test modules (full-horizon runs are the slow part)."""

from __future__ import annotations

import functools
import os

from swarminspect.engine import run_batch
from swarminspect.params import PRESETS, SimConfig

BASE_SEED = 20240917
N_RUNS = 100
WORKERS = os.cpu_count() or 1


@functools.lru_cache(maxsize=None)
def batch(preset: str, fill: float, n_runs: int = N_RUNS, feedback: bool | None = None):
    params = PRESETS[preset]
    if feedback is not None:
        params = params.__class__(**{**params.to_dict(), "feedback": feedback})
    return run_batch(params, [fill], n_runs, BASE_SEED, config=SimConfig(), workers=WORKERS)
