"""Seeded random streams.

Every random quantity comes from a numpy ``Philox`` (counter-based) stream keyed by
``SeedSequence(seed, spawn_key=(purpose, *index))``. Each purpose and each robot gets
its own stream, so changing one parameter never reshuffles unrelated draws. The
compiled kernel reads the very same bit generators, so both backends see identical
sequences.
"""

from __future__ import annotations

import math

import numpy as np

PURPOSE_PATTERN = 1
PURPOSE_POSES = 2
PURPOSE_MOTION = 3
PURPOSE_PSO = 4
PURPOSE_RUN = 5
PURPOSE_EVAL = 6

TWO_PI = 2.0 * math.pi


def stream(seed: int, purpose: int, *index: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=(purpose, *index))
    return np.random.Generator(np.random.Philox(ss))


def derive_seed(seed: int, purpose: int, *index: int) -> int:
    """A 63-bit child seed, a pure function of its arguments."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(purpose, *index))
    return int(ss.generate_state(1, np.uint64)[0] >> np.uint64(1))


def gauss(rng: np.random.Generator) -> float:
    """Standard normal draw by Box-Muller, consuming exactly two uniforms.

    Kept in plain arithmetic (not ``rng.standard_normal``) so the compiled kernel can
    reproduce it bit for bit.
    """
    u1 = rng.random()
    u2 = rng.random()
    return math.sqrt(-2.0 * math.log(1.0 - u1)) * math.cos(TWO_PI * u2)
