"""Swarm surface inspection: robots classify a tiled binary floor by Bayesian
consensus, and a noise-resistant particle swarm tunes their behaviour."""

from .arena import ArenaPattern, color_at, generate_pattern
from .engine import (
    FitnessRecord,
    SimTrace,
    evaluate_fitness,
    run_batch,
    run_simulation,
)
from .kernel import BACKEND
from .params import PRESETS, ParameterSet, SimConfig

__version__ = "0.1.0"

__all__ = [
    "ArenaPattern",
    "BACKEND",
    "FitnessRecord",
    "PRESETS",
    "ParameterSet",
    "SimConfig",
    "SimTrace",
    "color_at",
    "evaluate_fitness",
    "generate_pattern",
    "run_batch",
    "run_simulation",
]
