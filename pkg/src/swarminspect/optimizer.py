"""Noise-resistant particle swarm optimization of (tau, s, d, h).

Each candidate is scored by repeated randomized simulations, aggregated as
``mean + gamma * std`` so that fast *and* consistent parameter sets win.
"""

from __future__ import annotations

import dataclasses
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .engine import evaluate_fitness, map_jobs, run_simulation
from .params import BOUNDS, PRESETS, TUNED, ParameterSet, SimConfig
from .rng import PURPOSE_EVAL, PURPOSE_PSO, derive_seed, stream

CHECKPOINT_VERSION = 1

GLOBAL = "global"
RING = "ring"


@dataclass(frozen=True)
class SearchSpace:
    lower: tuple
    upper: tuple
    integer: tuple
    names: tuple = ()

    def __post_init__(self):
        if not len(self.lower) == len(self.upper) == len(self.integer):
            raise ValueError("lower, upper and integer must have equal length")
        if any(lo > hi for lo, hi in zip(self.lower, self.upper)):
            raise ValueError("lower bound above upper bound")

    @classmethod
    def parameter_box(cls) -> "SearchSpace":
        return cls(lower=tuple(float(BOUNDS[n][0]) for n in TUNED),
                   upper=tuple(float(BOUNDS[n][1]) for n in TUNED),
                   integer=(True,) * len(TUNED), names=TUNED)

    @property
    def dim(self) -> int:
        return len(self.lower)

    @property
    def lo(self) -> np.ndarray:
        return np.asarray(self.lower, dtype=float)

    @property
    def hi(self) -> np.ndarray:
        return np.asarray(self.upper, dtype=float)

    @property
    def diameter(self) -> float:
        return float(np.linalg.norm(self.hi - self.lo))

    def round(self, x: np.ndarray) -> np.ndarray:
        """Round integer dimensions half up; continuous ones pass through."""
        x = np.asarray(x, dtype=float)
        return np.where(self.integer, np.floor(x + 0.5), x)

    def contains(self, x: np.ndarray) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lo) and np.all(x <= self.hi))


@dataclass
class Particle:
    id: int
    x: np.ndarray
    v: np.ndarray
    best_x: np.ndarray
    best_fitness: float = math.inf
    fitness: float = math.nan  # most recent aggregate
    best_evals: int = 0  # aggregates folded into best_fitness (re-evaluation mode)

    def to_dict(self) -> dict:
        return {"id": self.id, "x": self.x.tolist(), "v": self.v.tolist(),
                "best_x": self.best_x.tolist(), "best_fitness": self.best_fitness,
                "fitness": self.fitness, "best_evals": self.best_evals}

    @classmethod
    def from_dict(cls, d: dict) -> "Particle":
        return cls(id=int(d["id"]), x=np.array(d["x"], dtype=float),
                   v=np.array(d["v"], dtype=float), best_x=np.array(d["best_x"], dtype=float),
                   best_fitness=float(d["best_fitness"]), fitness=float(d["fitness"]),
                   best_evals=int(d["best_evals"]))


@dataclass(frozen=True)
class PsoConfig:
    n_particles: int = 15
    n_iterations: int = 75
    n_noise_evals: int = 10
    w: float = 0.729
    w_p: float = 1.49
    w_n: float = 1.49
    gamma: float = 1.1
    topology: str = GLOBAL
    ring_k: int = 1
    seed: int = 0
    feedback: bool = False
    fill: float = 0.52
    reevaluate: bool = False
    seed_point: tuple | None = PRESETS["empirical"].vector()
    base_params: ParameterSet = PRESETS["empirical"]
    sim: SimConfig = field(default_factory=SimConfig)
    workers: int = 1

    def validate(self) -> "PsoConfig":
        if self.n_particles < 1:
            raise ValueError("n_particles must be at least 1")
        if self.n_iterations < 0:
            raise ValueError("n_iterations must be non-negative")
        if self.n_noise_evals < 2:
            raise ValueError("n_noise_evals must be at least 2 for a standard deviation")
        if self.gamma < 0:
            raise ValueError("gamma must be non-negative")
        if self.topology not in (GLOBAL, RING):
            raise ValueError(f"topology must be {GLOBAL!r} or {RING!r}")
        if self.topology == RING and self.ring_k < 1:
            raise ValueError("ring_k must be at least 1")
        return self

    def to_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in dataclasses.fields(self)}
        d["seed_point"] = list(self.seed_point) if self.seed_point is not None else None
        d["base_params"] = self.base_params.to_dict()
        d["sim"] = self.sim.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PsoConfig":
        d = dict(d)
        d["base_params"] = ParameterSet.from_dict(d["base_params"])
        d["sim"] = SimConfig.from_dict(d["sim"])
        if d.get("seed_point") is not None:
            d["seed_point"] = tuple(d["seed_point"])
        return cls(**d)


def aggregate(fits: Sequence[float], gamma: float) -> float:
    """``mean + gamma * sample std`` of the noise evaluations."""
    fits = np.asarray(fits, dtype=float)
    if fits.size < 2:
        raise ValueError("need at least two evaluations")
    return float(fits.mean() + gamma * fits.std(ddof=1))


def neighborhood_best(swarm: Sequence[Particle], i: int, config: PsoConfig) -> np.ndarray:
    n = len(swarm)
    if config.topology == RING:
        idx = [(i + off) % n for off in range(-config.ring_k, config.ring_k + 1)]
    else:
        idx = range(n)
    best = min(idx, key=lambda j: (swarm[j].best_fitness, j))
    return swarm[best].best_x


def pso_step(swarm: list[Particle], space: SearchSpace, config: PsoConfig,
             rng: np.random.Generator) -> list[Particle]:
    """One synchronous velocity/position update with absorbing walls.

    Neighbourhood bests are read before any particle moves. A dimension pushed
    past a bound is clamped there and its velocity zeroed.
    """
    lo, hi = space.lo, space.hi
    guides = [neighborhood_best(swarm, i, config) for i in range(len(swarm))]
    out = []
    for p, nb in zip(swarm, guides):
        r1 = rng.random(space.dim)
        r2 = rng.random(space.dim)
        v = config.w * p.v + config.w_p * r1 * (p.best_x - p.x) + config.w_n * r2 * (nb - p.x)
        x = p.x + v
        outside = (x < lo) | (x > hi)
        x = np.clip(x, lo, hi)
        v = np.where(outside, 0.0, v)
        out.append(dataclasses.replace(p, x=x, v=v))
    return out


# ---------------------------------------------------------------------------
# evaluation

Evaluator = Callable[[Sequence[np.ndarray], int, Sequence[int], int], list]


class EvaluationError(RuntimeError):
    def __init__(self, particle: int, eval_index: int, cause: BaseException):
        super().__init__(f"particle {particle}, noise evaluation {eval_index}: {cause}")
        self.particle = particle
        self.eval_index = eval_index


def _fit_job(job):
    params, sim = job
    try:
        return evaluate_fitness(run_simulation(params, sim)).fit
    except Exception as exc:
        return exc


class SimulationEvaluator:
    """Scores parameter vectors by simulation, ``n_noise_evals`` runs each.

    Seeds depend on (campaign seed, iteration, particle id, eval index, tag) only, so
    serial and parallel evaluation agree and every iteration sees fresh arenas.
    """

    def __init__(self, config: PsoConfig):
        self.config = config
        self.base = dataclasses.replace(config.base_params, feedback=config.feedback)
        self.last_fits: dict[int, list[float]] = {}

    def seed_for(self, iteration: int, particle: int, eval_index: int, tag: int = 0) -> int:
        return derive_seed(self.config.seed, PURPOSE_EVAL, iteration, particle, eval_index, tag)

    def __call__(self, positions, iteration, ids, tag=0):
        cfg = self.config
        jobs, keys = [], []
        for x, pid in zip(positions, ids):
            params = self.base.with_vector(x).validate()
            for e in range(cfg.n_noise_evals):
                sim = dataclasses.replace(cfg.sim, fill=cfg.fill,
                                          seed=self.seed_for(iteration, pid, e, tag))
                jobs.append((params, sim))
                keys.append((pid, e))
        results = map_jobs(_fit_job, jobs, cfg.workers)
        fits: dict[int, list[float]] = {}
        for (pid, e), res in zip(keys, results):
            if isinstance(res, Exception):
                raise EvaluationError(pid, e, res) from res
            fits.setdefault(pid, []).append(res)
        self.last_fits = fits
        return [aggregate(fits[pid], cfg.gamma) for pid in ids]


def evaluate_particle(x: np.ndarray, config: PsoConfig, iteration: int, particle_id: int) -> float:
    space = SearchSpace.parameter_box()
    xr = space.round(x)
    if not space.contains(xr):
        raise ValueError(f"position {xr.tolist()} lies outside the search box")
    return SimulationEvaluator(config)([xr], iteration, [particle_id])[0]


# ---------------------------------------------------------------------------
# campaign


@dataclass
class CampaignResult:
    best_position: np.ndarray
    best_fitness: float
    history: list[dict]
    swarm: list[Particle]
    completed_iteration: int


HISTORY_FIELDS = ("iteration", "particle", "position", "fitness", "personal_best",
                  "global_best", "swarm_mean", "mean_personal_best")


def _history_rows(it: int, swarm: list[Particle], evaluated: list[np.ndarray]) -> list[dict]:
    fits = np.array([p.fitness for p in swarm])
    pbests = np.array([p.best_fitness for p in swarm])
    g = float(pbests.min())
    return [{"iteration": it, "particle": p.id, "position": xr.tolist(), "fitness": p.fitness,
             "personal_best": p.best_fitness, "global_best": g,
             "swarm_mean": float(fits.mean()), "mean_personal_best": float(pbests.mean())}
            for p, xr in zip(swarm, evaluated)]


def _encode_state(obj):
    if isinstance(obj, np.ndarray):
        return {"__ndarray__": obj.tolist(), "dtype": str(obj.dtype)}
    if isinstance(obj, dict):
        return {k: _encode_state(v) for k, v in obj.items()}
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def _decode_state(obj):
    if isinstance(obj, dict):
        if "__ndarray__" in obj:
            return np.array(obj["__ndarray__"], dtype=obj["dtype"])
        return {k: _decode_state(v) for k, v in obj.items()}
    return obj


def save_checkpoint(path: str | Path, config: PsoConfig, space: SearchSpace, it: int,
                    swarm: list[Particle], rng: np.random.Generator, history: list[dict]) -> None:
    state = {
        "version": CHECKPOINT_VERSION,
        "config": config.to_dict(),
        "space": {"lower": list(space.lower), "upper": list(space.upper),
                  "integer": list(space.integer), "names": list(space.names)},
        "completed_iteration": it,
        "swarm": [p.to_dict() for p in swarm],
        "rng": _encode_state(rng.bit_generator.state),
        "history": history,
    }
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(json.dumps(state))
    os.replace(tmp, path)


def load_checkpoint(path: str | Path) -> dict:
    state = json.loads(Path(path).read_text())
    if state.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"checkpoint version {state.get('version')!r} is not supported "
                         f"(expected {CHECKPOINT_VERSION})")
    return state


def _comparable(cfg: dict) -> dict:
    # the worker budget does not change results
    return {k: v for k, v in cfg.items() if k != "workers"}


def _update_bests(swarm: list[Particle], fits: Sequence[float], evaluated) -> None:
    for p, f, xr in zip(swarm, fits, evaluated):
        p.fitness = float(f)
        if f < p.best_fitness:
            p.best_fitness = float(f)
            p.best_x = p.x.copy()
            p.best_evals = 1


def run_campaign(config: PsoConfig, evaluator: Evaluator | None = None,
                 space: SearchSpace | None = None, checkpoint: str | Path | None = None,
                 resume: bool = False,
                 on_iteration: Callable[[int, list[Particle]], None] | None = None
                 ) -> CampaignResult:
    """Run (or resume) a campaign: evaluate the initial swarm, then ``n_iterations``
    rounds of step-and-evaluate.

    The swarm starts uniformly in the box, except particle 0 which sits on
    ``config.seed_point`` when given. Velocities start at zero. With ``checkpoint``
    the full state is written after every iteration; ``resume=True`` continues from
    it and reproduces the uninterrupted history exactly.
    """
    config.validate()
    space = space or SearchSpace.parameter_box()
    evaluator = evaluator or SimulationEvaluator(config)

    if resume:
        if checkpoint is None:
            raise ValueError("resume requires a checkpoint path")
        state = load_checkpoint(checkpoint)
        if _comparable(state["config"]) != _comparable(json.loads(json.dumps(config.to_dict()))):
            raise ValueError("checkpoint was written by a different campaign configuration")
        swarm = [Particle.from_dict(d) for d in state["swarm"]]
        rng = np.random.Generator(np.random.Philox())
        rng.bit_generator.state = _decode_state(state["rng"])
        history = state["history"]
        start = state["completed_iteration"] + 1
    else:
        rng = stream(config.seed, PURPOSE_PSO)
        lo, hi = space.lo, space.hi
        swarm = []
        for i in range(config.n_particles):
            if i == 0 and config.seed_point is not None:
                x = np.clip(np.asarray(config.seed_point, dtype=float), lo, hi)
            else:
                x = lo + (hi - lo) * rng.random(space.dim)
            swarm.append(Particle(id=i, x=x, v=np.zeros(space.dim), best_x=x.copy()))
        history = []
        start = 0

    for it in range(start, config.n_iterations + 1):
        if it > 0:
            swarm = pso_step(swarm, space, config, rng)
        evaluated = [space.round(p.x) for p in swarm]
        for xr in evaluated:
            if not space.contains(xr):
                raise AssertionError(f"evaluated position {xr.tolist()} left the search box")
        fits = evaluator(evaluated, it, [p.id for p in swarm], 0)
        if config.reevaluate and it > 0:
            incumbents = [space.round(p.best_x) for p in swarm]
            again = evaluator(incumbents, it, [p.id for p in swarm], 1)
            for p, f in zip(swarm, again):
                p.best_fitness = (p.best_fitness * p.best_evals + f) / (p.best_evals + 1)
                p.best_evals += 1
        _update_bests(swarm, fits, evaluated)
        history.extend(_history_rows(it, swarm, evaluated))
        if checkpoint is not None:
            save_checkpoint(checkpoint, config, space, it, swarm, rng, history)
        if on_iteration is not None:
            on_iteration(it, swarm)

    best = min(swarm, key=lambda p: (p.best_fitness, p.id))
    return CampaignResult(best_position=space.round(best.best_x), best_fitness=best.best_fitness,
                          history=history, swarm=swarm, completed_iteration=config.n_iterations)
