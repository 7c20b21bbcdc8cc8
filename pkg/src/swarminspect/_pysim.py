"""Reference stepping loop composed from the per-module operations.

Slow (roughly a minute for a full one-hour run) but easy to read; the compiled kernel
must reproduce its output exactly.
"""

from __future__ import annotations

import numpy as np

from .arena import color_at, tile_index
from .comms import Bus, Message, compose_broadcast
from .inference import (
    Belief,
    DecisionConstants,
    DecisionState,
    count_observation,
    mass_below,
    update_belief,
    update_decision,
)
from .kinematics import (
    Fsm,
    MotionState,
    Pose,
    begin_pause,
    draw_forward_steps,
    sense_distances,
    step_motion,
)


def simulate(inp) -> dict:
    motion = inp.motion
    pattern = inp.pattern
    n = len(inp.poses)
    gens = inp.generators
    consts = DecisionConstants(p_c=inp.p_c, h=inp.h, theta=inp.theta)
    tps = pattern.tiles_per_side
    tile = pattern.tile_side

    poses = [Pose(float(p[0]), float(p[1]), float(p[2])) for p in inp.poses]
    states = [MotionState(Fsm.FORWARD,
                          draw_forward_steps(motion.s_max, gens[k], motion.forward_distribution),
                          0.0)
              for k in range(n)]
    beliefs = [Belief(inp.alpha0, inp.beta0) for _ in range(n)]
    decisions = [DecisionState() for _ in range(n)]
    since = [0] * n
    last_color = [-1] * n
    bus = Bus(n)

    visited = np.zeros(tps * tps, dtype=np.uint8)
    covered = 0

    def mark(pose):
        nonlocal covered
        cell = tile_index(pose.y, tile, tps) * tps + tile_index(pose.x, tile, tps)
        if not visited[cell]:
            visited[cell] = 1
            covered += 1

    for p in poses:
        mark(p)

    n_samples = inp.T_max // inp.sample_every + 1
    s_step = np.zeros(n_samples, dtype=np.int64)
    s_alpha = np.zeros((n_samples, n))
    s_beta = np.zeros((n_samples, n))
    s_df = np.zeros((n_samples, n), dtype=np.int8)
    s_x = np.zeros((n_samples, n))
    s_y = np.zeros((n_samples, n))
    s_h = np.zeros((n_samples, n))
    s_cov = np.zeros(n_samples, dtype=np.int64)

    def record(i, step):
        s_step[i] = step
        s_cov[i] = covered
        for k in range(n):
            s_alpha[i, k] = beliefs[k].alpha
            s_beta[i, k] = beliefs[k].beta
            s_df[i, k] = decisions[k].d_f
            s_x[i, k] = poses[k].x
            s_y[i, k] = poses[k].y
            s_h[i, k] = poses[k].heading

    record(0, 0)
    events = []
    emissions = []

    def integrate(k, step, color, counted):
        beliefs[k] = b = update_belief(beliefs[k], color)
        ds = decisions[k]
        if counted:
            ds = count_observation(ds)
        p = mass_below(b.alpha, b.beta, inp.theta)
        if p is not None:
            new = update_decision(ds, p, consts)
            if new.d_f != ds.d_f:
                events.append((step, k, int(new.d_f)))
            ds = new
        decisions[k] = ds

    for step in range(1, inp.T_max + 1):
        observed = [False] * n
        # motion, robots in id order against the others' current positions
        for k in range(n):
            st = states[k]
            if st.fsm == Fsm.PAUSED_SAMPLING:
                st, pose = step_motion(st, poses[k], motion, None, gens[k])
                observed[k] = st.fsm != Fsm.PAUSED_SAMPLING
            else:
                others = [(q.x, q.y) for j, q in enumerate(poses) if j != k]
                sensed = sense_distances(poses[k], others, motion)
                st, pose = step_motion(st, poses[k], motion, sensed, gens[k], others)
                since[k] += 1
                if since[k] == inp.tau:
                    since[k] = 0
                    st = begin_pause(st, inp.pause_steps)
            states[k] = st
            poses[k] = pose
            mark(pose)

        # sampling and emission
        own = [-1] * n
        for k in range(n):
            if observed[k]:
                c = color_at(pattern, poses[k].x, poses[k].y)
                own[k] = last_color[k] = c
            elif not (inp.broadcast_every_step and last_color[k] >= 0):
                continue
            bit, kind = compose_broadcast(decisions[k].d_f, last_color[k], inp.positive_feedback)
            msg = Message(k, bit, kind, step)
            emissions.append((step, k, bit, int(kind)))
            bus.deliver(msg)

        # belief and decision updates: own colour first, then the inbox
        for k in range(n):
            if own[k] >= 0:
                integrate(k, step, own[k], True)
            for msg in bus.drain(k):
                integrate(k, step, msg.color_bit, inp.count_received)

        if step % inp.sample_every == 0:
            record(step // inp.sample_every, step)

    ev = np.array(events, dtype=np.int64).reshape(-1, 3)
    em = np.array(emissions, dtype=np.int64).reshape(-1, 4)
    return {
        "sample_step": s_step,
        "alpha": s_alpha,
        "beta": s_beta,
        "d_f": s_df,
        "x": s_x,
        "y": s_y,
        "heading": s_h,
        "covered": s_cov,
        "events": ev,
        "emissions": em,
        "final_alpha": np.array([b.alpha for b in beliefs]),
        "final_beta": np.array([b.beta for b in beliefs]),
        "final_d_f": np.array([d.d_f for d in decisions], dtype=np.int8),
        "final_o_total": np.array([d.o_total for d in decisions], dtype=np.int64),
        "final_pose": np.array([[p.x, p.y, p.heading] for p in poses]),
        "final_fsm": np.array([int(s.fsm) for s in states], dtype=np.int8),
        "visited": visited,
    }
