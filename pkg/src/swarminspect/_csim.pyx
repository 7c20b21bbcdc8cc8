# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled stepping loop.

A line-for-line port of ``_pysim.simulate`` built on the same numerical
expressions as ``kinematics``/``inference``; outputs must match bit for bit.
Random draws come straight from the robots' numpy bit generators.
"""

from cpython.pycapsule cimport PyCapsule_GetPointer
from libc.math cimport cos, sin, sqrt, log, floor, ceil, fabs, M_PI
from libc.stdlib cimport malloc, free
from numpy.random cimport bitgen_t
from scipy.special.cython_special cimport betainc

import numpy as np

cdef enum:
    NSENS = 8

cdef enum:
    FORWARD = 0
    TURNING = 1
    PAUSED = 2
    AVOIDING = 3

cdef double TWO_PI = 2.0 * M_PI


cdef struct Robot:
    double x
    double y
    double h
    int fsm
    long steps
    double turn
    int pause_left
    int resume
    long since
    double alpha
    double beta
    int df
    int pending
    long o_total
    long o_i
    int last_color
    int own
    bint observed
    bitgen_t *rng


cdef struct Cfg:
    int n
    double side
    double r
    double R
    double sang[NSENS]
    int nsens
    double step_len
    double turn_step
    double d_trig
    long s_max
    int fwd_mode
    double turn_sigma
    double turn_bound
    double avoid_min
    double avoid_max
    double min_sep2
    long tau
    int pause_steps
    double p_c
    long h
    double theta
    bint feedback
    bint count_received
    bint every_step
    int tps
    double tile


cdef inline double uniform(bitgen_t *rng) noexcept nogil:
    return rng.next_double(rng.state)


cdef inline double gauss(bitgen_t *rng) noexcept nogil:
    cdef double u1 = uniform(rng)
    cdef double u2 = uniform(rng)
    return sqrt(-2.0 * log(1.0 - u1)) * cos(TWO_PI * u2)


cdef inline long draw_forward(Cfg *c, bitgen_t *rng) noexcept nogil:
    cdef double g = gauss(rng)
    cdef double v
    cdef double s = <double>c.s_max
    if c.fwd_mode == 1:
        v = fabs(g) * (0.5 * s)
    else:
        v = 0.5 * s + 0.25 * s * g
    cdef double k = floor(v + 0.5)
    if k < 1.0:
        return 1
    if k > s:
        return c.s_max
    return <long>k


cdef inline double draw_turn(Cfg *c, bitgen_t *rng) noexcept nogil:
    cdef double a = c.turn_sigma * gauss(rng)
    if a > c.turn_bound:
        return c.turn_bound
    if a < -c.turn_bound:
        return -c.turn_bound
    return a


cdef inline double avoid_turn(Cfg *c, double *sensed, bitgen_t *rng) noexcept nogil:
    cdef int i, idx = 0
    for i in range(1, c.nsens):
        if sensed[i] < sensed[idx]:
            idx = i
    cdef double direction = -1.0 if c.sang[idx] > 0.0 else 1.0
    return direction * (c.avoid_min + (c.avoid_max - c.avoid_min) * uniform(rng))


cdef inline double wrap(double a) noexcept nogil:
    if a >= M_PI:
        return a - 2.0 * M_PI
    if a < -M_PI:
        return a + 2.0 * M_PI
    return a


cdef inline int tile_index(double coord, Cfg *c) noexcept nogil:
    cdef int i = <int>ceil(coord / c.tile) - 1
    if i < 0:
        return 0
    if i >= c.tps:
        return c.tps - 1
    return i


cdef void sense(Cfg *c, Robot *rb, int k, double *out) noexcept nogil:
    cdef double R = c.R, r = c.r, side = c.side
    cdef double x = rb[k].x, y = rb[k].y, h = rb[k].h
    cdef double reach = r + R
    cdef double clear = 2.0 * r + R
    cdef double clear2, dx, dy, ang, ux, uy, ox, oy, t, tw, cc, b, disc, tq
    cdef double r2 = r * r
    cdef int i, j
    cdef bint near = False
    if x > reach and x < side - reach and y > reach and y < side - reach:
        clear2 = clear * clear
        for j in range(c.n):
            if j == k:
                continue
            dx = rb[j].x - x
            dy = rb[j].y - y
            if dx * dx + dy * dy <= clear2:
                near = True
                break
        if not near:
            for i in range(c.nsens):
                out[i] = R
            return
    for i in range(c.nsens):
        ang = h + c.sang[i]
        ux = cos(ang)
        uy = sin(ang)
        ox = x + r * ux
        oy = y + r * uy
        t = R
        if ux > 0.0:
            tw = (side - ox) / ux
            if tw < t:
                t = tw
        elif ux < 0.0:
            tw = (0.0 - ox) / ux
            if tw < t:
                t = tw
        if uy > 0.0:
            tw = (side - oy) / uy
            if tw < t:
                t = tw
        elif uy < 0.0:
            tw = (0.0 - oy) / uy
            if tw < t:
                t = tw
        for j in range(c.n):
            if j == k:
                continue
            dx = ox - rb[j].x
            dy = oy - rb[j].y
            cc = dx * dx + dy * dy - r2
            if cc <= 0.0:
                t = 0.0
                continue
            b = dx * ux + dy * uy
            if b < 0.0:
                disc = b * b - cc
                if disc >= 0.0:
                    tq = -b - sqrt(disc)
                    if tq < t:
                        t = tq
        if t < 0.0:
            t = 0.0
        out[i] = t


cdef void step_motion(Cfg *c, Robot *rb, int k, double *sensed) noexcept nogil:
    cdef Robot *me = &rb[k]
    cdef int i, j
    cdef double mn, rate, dh, lo, hi, nx, ny, dx, dy
    cdef bint truncated
    mn = sensed[0]
    for i in range(1, c.nsens):
        if sensed[i] < mn:
            mn = sensed[i]
    if me.fsm != AVOIDING and mn < c.d_trig:
        me.fsm = AVOIDING
        me.turn = avoid_turn(c, sensed, me.rng)

    if me.fsm != FORWARD:
        rate = c.turn_step
        if me.turn > rate:
            dh = rate
        elif me.turn < -rate:
            dh = -rate
        else:
            dh = me.turn
        me.h = wrap(me.h + dh)
        me.turn = me.turn - dh
        if me.turn == 0.0:
            me.fsm = FORWARD
            me.steps = draw_forward(c, me.rng)
        return

    lo = c.r
    hi = c.side - c.r
    nx = me.x + c.step_len * cos(me.h)
    ny = me.y + c.step_len * sin(me.h)
    truncated = False
    if nx < lo:
        nx = lo
        truncated = True
    elif nx > hi:
        nx = hi
        truncated = True
    if ny < lo:
        ny = lo
        truncated = True
    elif ny > hi:
        ny = hi
        truncated = True
    for j in range(c.n):
        if j == k:
            continue
        dx = nx - rb[j].x
        dy = ny - rb[j].y
        if dx * dx + dy * dy < c.min_sep2:
            nx = me.x
            ny = me.y
            truncated = True
            break
    me.steps -= 1
    me.x = nx
    me.y = ny
    if truncated:
        me.fsm = AVOIDING
        me.turn = avoid_turn(c, sensed, me.rng)
    elif me.steps <= 0:
        me.fsm = TURNING
        me.turn = draw_turn(c, me.rng)


cdef inline void integrate(Cfg *c, Robot *me, int color, bint counted, long step, int k,
                           list events):
    cdef double p
    cdef int side
    me.alpha = me.alpha + color
    me.beta = me.beta + (1 - color)
    if counted:
        me.o_total += 1
    if me.alpha > 0.0:
        if me.beta > 0.0:
            p = betainc(me.alpha, me.beta, c.theta)
        else:
            p = 0.0
    elif me.beta > 0.0:
        p = 1.0
    else:
        return
    if p > c.p_c:
        side = 0
    elif 1.0 - p > c.p_c:
        side = 1
    else:
        me.o_i = 0
        me.pending = -1
        return
    if me.pending != side:
        me.o_i = me.o_total
    if me.df != side and me.o_total - me.o_i >= c.h:
        me.df = side
        events.append((step, k, side))
    me.pending = side


def simulate(inp):
    cdef Cfg c
    cdef int n = len(inp.poses)
    cdef int k, j, i, m
    cdef long step
    motion = inp.motion
    pattern = inp.pattern
    angles = motion.sensor_angles
    if len(angles) > NSENS:
        raise ValueError(f"the compiled kernel supports at most {NSENS} sensors")

    c.n = n
    c.side = motion.side_m
    c.r = motion.r_body
    c.R = motion.sensor_range
    c.nsens = len(angles)
    for i in range(c.nsens):
        c.sang[i] = angles[i]
    c.step_len = motion.step_len
    c.turn_step = motion.turn_step
    c.d_trig = motion.d_trigger_m
    c.s_max = motion.s_max
    c.fwd_mode = 1 if motion.forward_distribution == "halfnormal" else 0
    c.turn_sigma = motion.turn_sigma
    c.turn_bound = motion.turn_bound
    c.avoid_min = motion.avoid_min
    c.avoid_max = motion.avoid_max
    c.min_sep2 = 4.0 * c.r * c.r
    c.tau = inp.tau
    c.pause_steps = inp.pause_steps
    c.p_c = inp.p_c
    c.h = inp.h
    c.theta = inp.theta
    c.feedback = inp.positive_feedback
    c.count_received = inp.count_received
    c.every_step = inp.broadcast_every_step
    c.tps = pattern.tiles_per_side
    c.tile = pattern.tile_side

    cdef const unsigned char[:] tiles = np.ascontiguousarray(pattern.tiles).reshape(-1)
    cdef long T_max = inp.T_max
    cdef long sample_every = inp.sample_every

    gens = list(inp.generators)
    bitgens = [g.bit_generator for g in gens]
    capsules = [bg.capsule for bg in bitgens]

    cdef Robot *rb = <Robot *> malloc(n * sizeof(Robot))
    cdef double sensed[NSENS]
    cdef int *em_sender = <int *> malloc(n * sizeof(int))
    cdef int *em_bit = <int *> malloc(n * sizeof(int))
    cdef int n_em, cell, covered = 0, bit, kind
    if rb == NULL or em_sender == NULL or em_bit == NULL:
        free(rb); free(em_sender); free(em_bit)
        raise MemoryError()

    visited_arr = np.zeros(c.tps * c.tps, dtype=np.uint8)
    cdef unsigned char[:] visited = visited_arr

    n_samples = T_max // sample_every + 1
    s_step_a = np.zeros(n_samples, dtype=np.int64)
    s_alpha_a = np.zeros((n_samples, n))
    s_beta_a = np.zeros((n_samples, n))
    s_df_a = np.zeros((n_samples, n), dtype=np.int8)
    s_x_a = np.zeros((n_samples, n))
    s_y_a = np.zeros((n_samples, n))
    s_h_a = np.zeros((n_samples, n))
    s_cov_a = np.zeros(n_samples, dtype=np.int64)
    cdef long long[:] s_step = s_step_a
    cdef double[:, :] s_alpha = s_alpha_a
    cdef double[:, :] s_beta = s_beta_a
    cdef signed char[:, :] s_df = s_df_a
    cdef double[:, :] s_x = s_x_a
    cdef double[:, :] s_y = s_y_a
    cdef double[:, :] s_h = s_h_a
    cdef long long[:] s_cov = s_cov_a

    if c.every_step:
        cap = n * T_max
    else:
        cap = n * (T_max // (c.tau + c.pause_steps) + 1)
    em_log_a = np.zeros((cap, 4), dtype=np.int64)
    cdef long long[:, :] em_log = em_log_a
    cdef long n_log = 0

    events = []
    try:
        poses = inp.poses
        for k in range(n):
            rb[k].rng = <bitgen_t *> PyCapsule_GetPointer(capsules[k], "BitGenerator")
            rb[k].x = poses[k][0]
            rb[k].y = poses[k][1]
            rb[k].h = poses[k][2]
            rb[k].fsm = FORWARD
            rb[k].turn = 0.0
            rb[k].pause_left = 0
            rb[k].resume = FORWARD
            rb[k].since = 0
            rb[k].alpha = inp.alpha0
            rb[k].beta = inp.beta0
            rb[k].df = -1
            rb[k].pending = -1
            rb[k].o_total = 0
            rb[k].o_i = 0
            rb[k].last_color = -1
            rb[k].own = -1
            rb[k].observed = False
        for k in range(n):
            rb[k].steps = draw_forward(&c, rb[k].rng)
        for k in range(n):
            cell = tile_index(rb[k].y, &c) * c.tps + tile_index(rb[k].x, &c)
            if not visited[cell]:
                visited[cell] = 1
                covered += 1

        s_step[0] = 0
        s_cov[0] = covered
        for k in range(n):
            s_alpha[0, k] = rb[k].alpha
            s_beta[0, k] = rb[k].beta
            s_df[0, k] = rb[k].df
            s_x[0, k] = rb[k].x
            s_y[0, k] = rb[k].y
            s_h[0, k] = rb[k].h

        for step in range(1, T_max + 1):
            for k in range(n):
                rb[k].observed = False
                if rb[k].fsm == PAUSED:
                    rb[k].pause_left -= 1
                    if rb[k].pause_left <= 0:
                        rb[k].pause_left = 0
                        rb[k].fsm = rb[k].resume
                        rb[k].resume = FORWARD
                        rb[k].observed = True
                else:
                    sense(&c, rb, k, sensed)
                    step_motion(&c, rb, k, sensed)
                    rb[k].since += 1
                    if rb[k].since == c.tau:
                        rb[k].since = 0
                        rb[k].resume = rb[k].fsm
                        rb[k].fsm = PAUSED
                        rb[k].pause_left = c.pause_steps
                cell = tile_index(rb[k].y, &c) * c.tps + tile_index(rb[k].x, &c)
                if not visited[cell]:
                    visited[cell] = 1
                    covered += 1

            n_em = 0
            for k in range(n):
                rb[k].own = -1
                if rb[k].observed:
                    rb[k].own = tiles[tile_index(rb[k].y, &c) * c.tps + tile_index(rb[k].x, &c)]
                    rb[k].last_color = rb[k].own
                elif not (c.every_step and rb[k].last_color >= 0):
                    continue
                if c.feedback and rb[k].df != -1:
                    bit = rb[k].df
                    kind = 1
                else:
                    bit = rb[k].last_color
                    kind = 0
                em_sender[n_em] = k
                em_bit[n_em] = bit
                n_em += 1
                em_log[n_log, 0] = step
                em_log[n_log, 1] = k
                em_log[n_log, 2] = bit
                em_log[n_log, 3] = kind
                n_log += 1

            for k in range(n):
                if rb[k].own >= 0:
                    integrate(&c, &rb[k], rb[k].own, True, step, k, events)
                for m in range(n_em):
                    if em_sender[m] != k:
                        integrate(&c, &rb[k], em_bit[m], c.count_received, step, k, events)

            if step % sample_every == 0:
                i = step // sample_every
                s_step[i] = step
                s_cov[i] = covered
                for k in range(n):
                    s_alpha[i, k] = rb[k].alpha
                    s_beta[i, k] = rb[k].beta
                    s_df[i, k] = rb[k].df
                    s_x[i, k] = rb[k].x
                    s_y[i, k] = rb[k].y
                    s_h[i, k] = rb[k].h

        out = {
            "sample_step": s_step_a,
            "alpha": s_alpha_a,
            "beta": s_beta_a,
            "d_f": s_df_a,
            "x": s_x_a,
            "y": s_y_a,
            "heading": s_h_a,
            "covered": s_cov_a,
            "events": np.array(events, dtype=np.int64).reshape(-1, 3),
            "emissions": em_log_a[:n_log].copy(),
            "final_alpha": np.array([rb[k].alpha for k in range(n)]),
            "final_beta": np.array([rb[k].beta for k in range(n)]),
            "final_d_f": np.array([rb[k].df for k in range(n)], dtype=np.int8),
            "final_o_total": np.array([rb[k].o_total for k in range(n)], dtype=np.int64),
            "final_pose": np.array([[rb[k].x, rb[k].y, rb[k].h] for k in range(n)]),
            "final_fsm": np.array([rb[k].fsm for k in range(n)], dtype=np.int8),
            "visited": visited_arr,
        }
    finally:
        free(rb)
        free(em_sender)
        free(em_bit)
    return out
