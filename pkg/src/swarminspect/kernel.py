"""Backend selection for the stepping loop.

The compiled ``_csim`` extension is used when it imports. Otherwise, or when the
environment variable ``SWARMINSPECT_PURE_PYTHON=1`` is set, the pure-Python loop in
``_pysim`` is used. Both produce identical output.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import _pysim
from .arena import ArenaPattern
from .kinematics import MotionConfig

try:
    from . import _csim
except ImportError:  # extension not built
    _csim = None

BACKENDS: dict[str, Callable] = {"python": _pysim.simulate}
if _csim is not None:
    BACKENDS["compiled"] = _csim.simulate

if _csim is not None and os.environ.get("SWARMINSPECT_PURE_PYTHON", "") not in ("1", "true"):
    BACKEND = "compiled"
else:
    BACKEND = "python"


@dataclass
class KernelInput:
    pattern: ArenaPattern
    poses: np.ndarray  # (n, 3): x, y, heading
    generators: list  # one motion Generator per robot, consumed in place
    motion: MotionConfig
    tau: int
    h: int
    p_c: float
    theta: float
    alpha0: float
    beta0: float
    positive_feedback: bool
    count_received: bool
    broadcast_every_step: bool
    T_max: int
    pause_steps: int
    sample_every: int


def simulate(inp: KernelInput, backend: str | None = None) -> dict:
    name = backend or BACKEND
    try:
        fn = BACKENDS[name]
    except KeyError:
        raise ValueError(f"backend {name!r} unavailable; have {sorted(BACKENDS)}") from None
    return fn(inp)
