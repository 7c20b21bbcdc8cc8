import dataclasses
import os
import subprocess
import sys

import numpy as np
import pytest
import shared
from oracles import fitness_oracle

from swarminspect.arena import WHITE, color_at
from swarminspect.engine import (
    BatchRunError,
    DecisionEvent,
    DecisionLog,
    evaluate_fitness,
    initial_poses,
    run_batch,
    run_seed,
    run_simulation,
)
from swarminspect.inference import Decision
from swarminspect.params import PRESETS, ParameterBoundsError, ParameterSet, SimConfig

EMP = PRESETS["empirical"]


def short(**kw):
    return dataclasses.replace(SimConfig(), **{"T_max": 40_000, **kw})


def log(events, final, truth=WHITE, n=1):
    evs = [DecisionEvent(int(t / 0.008), r, d, t, d == truth) for t, r, d in events]
    return DecisionLog(n, 3600.0, truth, evs, np.array(final))


# --- fitness ---------------------------------------------------------------

def test_single_correct_event():
    rec = evaluate_fitness(log([(100.0, 0, WHITE)], [WHITE]))
    assert rec.f[0] == 100.0 and rec.fit == 100.0


def test_mixed_events_average():
    rec = evaluate_fitness(log([(200.0, 0, 1), (300.0, 0, 0), (400.0, 0, 1)], [1]))
    assert rec.f[0] == pytest.approx((200 + 3600 + 400) / 3)
    assert rec.f[0] == pytest.approx(1400)


def test_no_events_scores_horizon():
    rec = evaluate_fitness(log([], [Decision.UNDECIDED]))
    assert rec.f[0] == 3600.0


def test_wrong_final_overrides_mean():
    rec = evaluate_fitness(log([(50.0, 0, 1), (90.0, 0, 0)], [0]))
    assert rec.f[0] == 3600.0


def test_fitness_matches_oracle_on_a_real_trace():
    t = run_simulation(EMP, short(seed=5))
    rec = evaluate_fitness(t)
    per, fit = fitness_oracle(4, t.config.horizon_s, t.truth,
                              [(e.time_s, e.robot, e.d_f) for e in t.events], t.final_d_f)
    assert rec.f.tolist() == per and rec.fit == fit


# --- simulation ------------------------------------------------------------

@pytest.mark.parametrize("fill,side", [(1.0, Decision.WHITE), (0.0, Decision.BLACK)])
def test_uniform_floor_decided_correctly(fill, side):
    t = run_simulation(EMP, short(fill=fill, seed=2, T_max=60_000))
    assert (t.final_d_f == side).all()
    assert t.events and all(e.correct for e in t.events)
    # once decided, never reverts
    assert all(e.d_f == side for e in t.events)
    assert len(t.events) == 4


def test_trace_is_deterministic():
    a = run_simulation(EMP, short(seed=9))
    b = run_simulation(EMP, short(seed=9))
    for f in ("alpha", "beta", "d_f", "x", "y", "heading", "coverage", "emissions"):
        assert np.array_equal(getattr(a, f), getattr(b, f))
    assert a.events == b.events


def test_coverage_monotone_and_bounded():
    t = run_simulation(EMP, short(seed=4))
    assert np.all(np.diff(t.coverage) >= 0)
    assert 0 <= t.coverage.min() and t.coverage.max() <= 1
    tiles = {(min(15, int(x / 0.0625)), min(15, int(y / 0.0625))) for x, y, _ in t.initial_poses}
    assert t.coverage[0] >= len(tiles) / 256


def test_observation_schedule():
    p = EMP
    cfg = short(seed=6)
    t = run_simulation(p, cfg)
    period = p.tau + cfg.pause_steps
    for k in range(4):
        steps = t.emissions[t.emissions[:, 1] == k, 0]
        assert steps.tolist() == [period * m for m in range(1, cfg.T_max // period + 1)]
    assert (t.final_o_total == cfg.T_max // period).all()


def test_observations_report_floor_colour():
    # robots hold still while sampling, so the pose at the first sample step is
    # where the colour was read
    cfg = short(seed=8, T_max=PRESETS["empirical"].tau + 5)
    t = run_simulation(EMP, cfg)
    for step, sender, bit, kind in t.emissions.tolist():
        assert bit == color_at(t.pattern, *t.final_pose[sender][:2])


def test_u_minus_broadcasts_only_observations():
    t = run_simulation(EMP, short(seed=3, T_max=450_000))
    assert (t.emissions[:, 3] == 0).all()


def test_u_plus_switches_to_decisions():
    t = run_simulation(PRESETS["optimized_uplus"], short(seed=3, T_max=450_000))
    assert (t.emissions[:, 3] == 1).any()


def test_fitness_bounds_on_traces():
    for seed in range(5):
        t = run_simulation(PRESETS["optimized_uminus"], SimConfig(seed=seed))
        rec = evaluate_fitness(t)
        assert np.all((rec.f > 0) & (rec.f <= 3600))
        for k in range(4):
            mine = [e for e in t.events if e.robot == k]
            if mine and all(e.correct for e in mine) and rec.final_correct[k]:
                assert rec.f[k] <= mine[-1].time_s


def test_rejects_out_of_bounds_params():
    with pytest.raises(ParameterBoundsError, match="1410"):
        run_simulation(ParameterSet(tau=9999), short())


def test_rejects_tied_floor():
    with pytest.raises(ValueError, match="majority"):
        run_simulation(EMP, short(fill=0.5))


def test_rejects_unplaceable_swarm():
    with pytest.raises(ValueError, match="place"):
        initial_poses(SimConfig(n_robots=500), 0)


def test_initial_poses_inside_and_apart():
    poses = initial_poses(SimConfig(n_robots=20), 3)
    r = 0.025
    assert np.all((poses[:, :2] >= r) & (poses[:, :2] <= 1 - r))
    d = np.hypot(*(poses[:, None, :2] - poses[None, :, :2]).transpose(2, 0, 1))
    assert np.all(d[np.triu_indices(20, 1)] >= 2 * r)


# --- batches ---------------------------------------------------------------

def test_single_run_batch_is_composition():
    cfg = short()
    res = run_batch(EMP, [0.52], 1, 77, config=cfg)
    direct = evaluate_fitness(run_simulation(EMP, dataclasses.replace(cfg, seed=run_seed(77, 0))))
    assert res.fits(0.52).tolist() == [direct.fit]


def test_batches_repeat():
    a = run_batch(EMP, [0.52, 0.7], 3, 5, config=short())
    b = run_batch(EMP, [0.52, 0.7], 3, 5, config=short())
    assert a.fits(0.52).tolist() == b.fits(0.52).tolist()
    assert a.fits(0.7).tolist() == b.fits(0.7).tolist()


def test_batch_seeds_shared_across_fills():
    a = run_batch(EMP, [0.52, 0.7], 2, 5, config=short())
    assert [r.seed for r in a.runs[0.52]] == [r.seed for r in a.runs[0.7]]


def test_batch_errors_carry_run_index():
    with pytest.raises(BatchRunError, match="run 0"):
        run_batch(EMP, [0.5], 2, 0, config=short())
    res = run_batch(EMP, [0.5, 0.7], 2, 0, config=short(), on_error="collect")
    assert [(f, r) for f, r, _ in res.failed] == [(0.5, 0), (0.5, 1)]
    assert len(res.runs[0.7]) == 2


def test_batch_curves_shape():
    res = run_batch(EMP, [0.7], 2, 1, config=short())
    t, belief, cov = res.curves(0.7)
    assert t.shape == belief.shape == cov.shape
    assert np.all(np.diff(cov) >= 0)


@pytest.mark.slow
def test_empirical_mostly_decides_before_horizon():
    res = shared.batch("empirical", 0.52)
    decided = sum(int(r.record.n_events.sum() > 0) for r in res.runs[0.52])
    assert decided > 50


# --- backend selection -----------------------------------------------------

def test_env_forces_pure_python():
    env = {**os.environ, "SWARMINSPECT_PURE_PYTHON": "1"}
    out = subprocess.run([sys.executable, "-c",
                          "from swarminspect import kernel; print(kernel.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


def test_unknown_backend_rejected():
    with pytest.raises(ValueError, match="unavailable"):
        run_simulation(EMP, short(T_max=10), backend="gpu")
