"""Simulation orchestration: single runs, fitness scoring and randomized batches."""

from __future__ import annotations

import dataclasses
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from . import kernel
from .arena import ArenaPattern, generate_pattern
from .comms import Kind
from .inference import Decision
from .params import ParameterSet, SimConfig
from .rng import PURPOSE_MOTION, PURPOSE_POSES, PURPOSE_RUN, derive_seed, stream

MAX_PLACEMENT_ATTEMPTS = 10_000


@dataclass(frozen=True)
class DecisionEvent:
    step: int
    robot: int
    d_f: int
    time_s: float
    correct: bool


@dataclass
class DecisionLog:
    """The part of a trace that fitness scoring needs."""

    n_robots: int
    horizon_s: float
    truth: int
    events: list[DecisionEvent]
    final_d_f: np.ndarray


@dataclass
class SimTrace:
    params: ParameterSet
    config: SimConfig
    pattern: ArenaPattern
    initial_poses: np.ndarray
    sample_step: np.ndarray
    alpha: np.ndarray  # (samples, robots)
    beta: np.ndarray
    d_f: np.ndarray
    x: np.ndarray
    y: np.ndarray
    heading: np.ndarray
    coverage: np.ndarray  # fraction of tiles visited, per sample
    events: list[DecisionEvent]
    emissions: np.ndarray  # (E, 4): step, sender, bit, kind
    final_alpha: np.ndarray
    final_beta: np.ndarray
    final_d_f: np.ndarray
    final_o_total: np.ndarray
    final_pose: np.ndarray
    backend: str

    @property
    def truth(self) -> int:
        return self.pattern.majority

    @property
    def sample_time_s(self) -> np.ndarray:
        return self.sample_step * self.config.motion.dt

    def decision_log(self) -> DecisionLog:
        return DecisionLog(self.config.n_robots, self.config.horizon_s, self.truth,
                           list(self.events), np.asarray(self.final_d_f))

    def mean_belief(self) -> np.ndarray:
        """Swarm-average posterior mean of the fill ratio per sample (NaN before any colour)."""
        total = self.alpha + self.beta
        with np.errstate(invalid="ignore", divide="ignore"):
            mean = np.where(total > 0, self.alpha / np.where(total > 0, total, 1.0), np.nan)
        out = np.full(mean.shape[0], np.nan)
        ok = ~np.all(np.isnan(mean), axis=1)
        out[ok] = np.nanmean(mean[ok], axis=1)
        return out

    def deliveries(self) -> Iterator[tuple[int, int, int, int, int]]:
        """One row per delivered message: (step, sender, receiver, bit, kind)."""
        n = self.config.n_robots
        for step, sender, bit, kind in self.emissions.tolist():
            for receiver in range(n):
                if receiver != sender:
                    yield step, sender, receiver, bit, kind

    def time_to_consensus_s(self) -> float | None:
        """Time of the last decision event, if every robot ends on the same side."""
        final = set(int(v) for v in self.final_d_f)
        if len(final) != 1 or Decision.UNDECIDED in final or not self.events:
            return None
        return self.events[-1].time_s


@dataclass
class FitnessRecord:
    f: np.ndarray  # per-robot score in seconds
    n_events: np.ndarray
    fit: float
    final_correct: np.ndarray


def initial_poses(config: SimConfig, seed: int) -> np.ndarray:
    """Uniformly random, non-overlapping poses with the bodies inside the arena."""
    m = config.motion
    r = m.r_body
    span = m.side_m - 2.0 * r
    rng = stream(seed, PURPOSE_POSES)
    poses = np.zeros((config.n_robots, 3))
    min_sep2 = 4.0 * r * r
    for k in range(config.n_robots):
        for _ in range(MAX_PLACEMENT_ATTEMPTS):
            x = r + span * rng.random()
            y = r + span * rng.random()
            if all((x - poses[j, 0]) ** 2 + (y - poses[j, 1]) ** 2 >= min_sep2 for j in range(k)):
                break
        else:
            raise ValueError(
                f"could not place {config.n_robots} robots of radius {r} m without overlap")
        poses[k] = (x, y, -math.pi + 2.0 * math.pi * rng.random())
    return poses


def run_simulation(params: ParameterSet, config: SimConfig, backend: str | None = None,
                   pattern: ArenaPattern | None = None) -> SimTrace:
    """Run one seeded simulation to ``config.T_max``.

    The arena, initial poses and every robot's motion stream derive from
    ``config.seed``. A ``pattern`` may be supplied to override the generated one.
    """
    params.validate()
    config.validate()
    if pattern is None:
        pattern = generate_pattern(config.fill, config.seed,
                                   side_m=config.motion.side_m)
    if pattern.n_white * 2 == pattern.tiles.size:
        raise ValueError("a pattern with exactly half white tiles has no majority; "
                         "choose a fill away from 0.5")
    motion = dataclasses.replace(config.motion, d_trigger_mm=float(params.d), s_max=int(params.s))
    poses = initial_poses(config, config.seed)
    inp = kernel.KernelInput(
        pattern=pattern,
        poses=poses.copy(),
        generators=[stream(config.seed, PURPOSE_MOTION, k) for k in range(config.n_robots)],
        motion=motion,
        tau=int(params.tau),
        h=int(params.h),
        p_c=float(params.p_c),
        theta=float(config.theta),
        alpha0=float(params.alpha0),
        beta0=float(params.beta0),
        positive_feedback=bool(params.feedback),
        count_received=bool(config.count_received),
        broadcast_every_step=bool(config.broadcast_every_step),
        T_max=int(config.T_max),
        pause_steps=int(config.pause_steps),
        sample_every=int(config.sample_every),
    )
    backend = backend or kernel.BACKEND
    raw = kernel.simulate(inp, backend)
    truth = pattern.majority
    dt = motion.dt
    events = [DecisionEvent(int(s), int(k), int(d), s * dt, int(d) == truth)
              for s, k, d in raw["events"].tolist()]
    return SimTrace(
        params=params,
        config=config,
        pattern=pattern,
        initial_poses=poses,
        sample_step=raw["sample_step"],
        alpha=raw["alpha"],
        beta=raw["beta"],
        d_f=raw["d_f"],
        x=raw["x"],
        y=raw["y"],
        heading=raw["heading"],
        coverage=raw["covered"] / pattern.tiles.size,
        events=events,
        emissions=raw["emissions"],
        final_alpha=raw["final_alpha"],
        final_beta=raw["final_beta"],
        final_d_f=raw["final_d_f"],
        final_o_total=raw["final_o_total"],
        final_pose=raw["final_pose"],
        backend=backend,
    )


def evaluate_fitness(trace: SimTrace | DecisionLog) -> FitnessRecord:
    """Score a run: lower is better, in seconds.

    Each decision event adds its time when correct and the horizon when wrong; a
    robot's score is the mean over its own events, replaced by the horizon if its
    final decision is wrong or missing. The run's fitness sums the robots' scores.
    """
    log = trace.decision_log() if isinstance(trace, SimTrace) else trace
    n = log.n_robots
    horizon = log.horizon_s
    total = np.zeros(n)
    count = np.zeros(n, dtype=np.int64)
    for ev in log.events:
        count[ev.robot] += 1
        total[ev.robot] += ev.time_s if ev.correct else horizon
    final_correct = np.asarray(log.final_d_f) == log.truth
    with np.errstate(invalid="ignore", divide="ignore"):
        f = np.where(count > 0, total / np.maximum(count, 1), horizon)
    f = np.where(final_correct, f, horizon)
    return FitnessRecord(f=f, n_events=count, fit=float(f.sum()), final_correct=final_correct)


# ---------------------------------------------------------------------------
# batches


@dataclass
class RunSummary:
    run: int
    fill: float
    seed: int
    actual_fill: float
    record: FitnessRecord
    time_to_consensus_s: float | None
    sample_time_s: np.ndarray
    mean_belief: np.ndarray
    coverage: np.ndarray


@dataclass
class BatchResult:
    params: ParameterSet
    fills: list[float]
    runs: dict[float, list[RunSummary]] = field(default_factory=dict)
    failed: list[tuple[float, int, str]] = field(default_factory=list)

    def fits(self, fill: float) -> np.ndarray:
        return np.array([r.record.fit for r in self.runs[fill]])

    def median(self, fill: float) -> float:
        return float(np.median(self.fits(fill)))

    def curves(self, fill: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Run-averaged (time, belief, coverage) curves."""
        runs = self.runs[fill]
        belief = np.vstack([r.mean_belief for r in runs])
        cov = np.vstack([r.coverage for r in runs])
        with np.errstate(invalid="ignore"):
            mb = np.full(belief.shape[1], np.nan)
            ok = ~np.all(np.isnan(belief), axis=0)
            mb[ok] = np.nanmean(belief[:, ok], axis=0)
        return runs[0].sample_time_s, mb, cov.mean(axis=0)


class BatchRunError(RuntimeError):
    def __init__(self, fill: float, run: int, cause: BaseException):
        super().__init__(f"run {run} at fill {fill} failed: {cause}")
        self.fill = fill
        self.run = run


def run_seed(base_seed: int, run: int) -> int:
    """Seed of run ``run``; the same for every fill and parameter set."""
    return derive_seed(base_seed, PURPOSE_RUN, run)


def _batch_job(job) -> RunSummary:
    params, config, run, backend = job
    trace = run_simulation(params, config, backend)
    return RunSummary(run=run, fill=config.fill, seed=config.seed,
                      actual_fill=trace.pattern.actual_fill,
                      record=evaluate_fitness(trace),
                      time_to_consensus_s=trace.time_to_consensus_s(),
                      sample_time_s=trace.sample_time_s,
                      mean_belief=trace.mean_belief(),
                      coverage=trace.coverage)


def _safe_job(job):
    try:
        return _batch_job(job)
    except Exception as exc:  # reported per run by the caller
        return exc


def map_jobs(fn, jobs: Sequence, workers: int = 1) -> list:
    """Order-preserving map, in-process for ``workers <= 1``."""
    if workers <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs, chunksize=max(1, len(jobs) // (4 * workers))))


def run_batch(params: ParameterSet, fills: Sequence[float], n_runs: int, base_seed: int,
              config: SimConfig | None = None, workers: int = 1,
              backend: str | None = None, on_error: str = "raise") -> BatchResult:
    """``n_runs`` independent simulations per fill ratio.

    Run ``r`` uses the same seed at every fill, so the arena layout and starting poses
    vary with the run index only. With ``on_error="collect"`` failures are recorded
    in ``result.failed`` instead of raised.
    """
    if n_runs < 1:
        raise ValueError("n_runs must be at least 1")
    if on_error not in ("raise", "collect"):
        raise ValueError("on_error must be 'raise' or 'collect'")
    params.validate()
    config = config or SimConfig()
    jobs = []
    for fill in fills:
        for r in range(n_runs):
            cfg = dataclasses.replace(config, fill=float(fill), seed=run_seed(base_seed, r))
            jobs.append((params, cfg, r, backend))
    results = map_jobs(_safe_job, jobs, workers)
    out = BatchResult(params=params, fills=[float(f) for f in fills])
    for (_, cfg, r, _), res in zip(jobs, results):
        if isinstance(res, Exception):
            if on_error == "raise":
                raise BatchRunError(cfg.fill, r, res) from res
            out.failed.append((cfg.fill, r, str(res)))
            continue
        out.runs.setdefault(cfg.fill, []).append(res)
    return out
