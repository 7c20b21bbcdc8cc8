"""Velocity-kinematics model of a small wheeled robot doing a random walk.

Robots are discs that move at constant speed, turn in place at a fixed rate and stop
instantly. Eight time-of-flight rays fan out over the front of the body. Any reading
below the trigger distance puts the robot into an in-place avoidance turn.

All arithmetic here is mirrored operation for operation by the compiled kernel in
``_csim.pyx``; keep the two in step when editing either one.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .rng import gauss

SPEED_M_S = 0.0277
DT_S = 0.008
BODY_RADIUS_M = 0.025
SENSOR_RANGE_M = 0.15
SENSOR_ANGLES_DEG = (-105.0, -75.0, -45.0, -15.0, 15.0, 45.0, 75.0, 105.0)
TURN_RATE_RAD_S = (math.pi / 2) / 0.5

FORWARD_CENTERED = "centered"
FORWARD_HALFNORMAL = "halfnormal"
FORWARD_DISTRIBUTIONS = (FORWARD_CENTERED, FORWARD_HALFNORMAL)


class Fsm(enum.IntEnum):
    FORWARD = 0
    TURNING = 1
    PAUSED_SAMPLING = 2
    AVOIDING = 3


@dataclass(frozen=True)
class Pose:
    x: float
    y: float
    heading: float


@dataclass(frozen=True)
class MotionConfig:
    speed: float = SPEED_M_S
    dt: float = DT_S
    r_body: float = BODY_RADIUS_M
    sensor_range: float = SENSOR_RANGE_M
    sensor_angles_deg: tuple = SENSOR_ANGLES_DEG
    d_trigger_mm: float = 50.0
    s_max: int = 564
    turn_rate: float = TURN_RATE_RAD_S
    turn_sigma: float = math.pi / 4
    turn_bound: float = math.pi / 2
    avoid_min: float = math.pi / 4
    avoid_max: float = math.pi / 2
    forward_distribution: str = FORWARD_CENTERED
    side_m: float = 1.0
    sensor_angles: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "sensor_angles",
                           tuple(math.radians(a) for a in self.sensor_angles_deg))
        self.validate()

    def validate(self) -> None:
        if self.speed <= 0 or self.dt <= 0:
            raise ValueError("speed and dt must be positive")
        if not 0 < self.r_body < self.side_m / 2:
            raise ValueError("body radius must be positive and fit in the arena")
        if len(set(self.sensor_angles_deg)) != len(self.sensor_angles_deg):
            raise ValueError("sensor angles must be distinct")
        if not 0 < self.d_trigger_mm <= self.sensor_range * 1000:
            raise ValueError(
                f"d_trigger_mm={self.d_trigger_mm} must be positive and within the "
                f"sensor range ({self.sensor_range * 1000:g} mm)")
        if self.s_max < 1:
            raise ValueError("s_max must be at least 1")
        if self.forward_distribution not in FORWARD_DISTRIBUTIONS:
            raise ValueError(f"unknown forward_distribution {self.forward_distribution!r}")
        if not 0 <= self.avoid_min <= self.avoid_max:
            raise ValueError("need 0 <= avoid_min <= avoid_max")

    @property
    def step_len(self) -> float:
        return self.speed * self.dt

    @property
    def turn_step(self) -> float:
        return self.turn_rate * self.dt

    @property
    def d_trigger_m(self) -> float:
        return self.d_trigger_mm / 1000.0


@dataclass(frozen=True)
class MotionState:
    fsm: Fsm = Fsm.FORWARD
    steps_remaining: int = 0
    turn_remaining: float = 0.0  # signed radians still to rotate
    pause_remaining: int = 0
    resume_fsm: Fsm = Fsm.FORWARD  # state to restore after a sampling pause


def wrap_angle(a: float) -> float:
    if a >= math.pi:
        return a - 2.0 * math.pi
    if a < -math.pi:
        return a + 2.0 * math.pi
    return a


def draw_forward_steps(s_max: int, rng: np.random.Generator,
                       distribution: str = FORWARD_CENTERED) -> int:
    """Length of a straight leg in steps, an integer in ``[1, s_max]``."""
    g = gauss(rng)
    if distribution == FORWARD_HALFNORMAL:
        v = abs(g) * (0.5 * s_max)
    else:
        v = 0.5 * s_max + 0.25 * s_max * g
    k = math.floor(v + 0.5)
    if k < 1:
        return 1
    if k > s_max:
        return int(s_max)
    return int(k)


def draw_turn_angle(rng: np.random.Generator, sigma: float = math.pi / 4,
                    bound: float = math.pi / 2) -> float:
    a = sigma * gauss(rng)
    if a > bound:
        return bound
    if a < -bound:
        return -bound
    return a


def avoid_turn(sensed: Sequence[float], config: MotionConfig,
               rng: np.random.Generator) -> float:
    """Signed turn away from the sensor with the smallest reading."""
    idx = min(range(len(sensed)), key=sensed.__getitem__)
    direction = -1.0 if config.sensor_angles[idx] > 0.0 else 1.0
    return direction * (config.avoid_min + (config.avoid_max - config.avoid_min) * rng.random())


def sense_distances(pose: Pose, others: Sequence[tuple[float, float]],
                    config: MotionConfig) -> tuple[float, ...]:
    """Ray-cast each sensor from the body edge to the walls and other robots' discs.

    Readings are capped at ``sensor_range``; other bodies are discs of ``r_body``.
    """
    R = config.sensor_range
    r = config.r_body
    side = config.side_m
    x, y, h = pose.x, pose.y, pose.heading

    # nothing within reach of any ray: skip the casting
    reach = r + R
    clear = 2.0 * r + R
    if x > reach and x < side - reach and y > reach and y < side - reach:
        clear2 = clear * clear
        for qx, qy in others:
            dx = qx - x
            dy = qy - y
            if dx * dx + dy * dy <= clear2:
                break
        else:
            return (R,) * len(config.sensor_angles)

    r2 = r * r
    out = []
    for a in config.sensor_angles:
        ang = h + a
        ux = math.cos(ang)
        uy = math.sin(ang)
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
        for qx, qy in others:
            dx = ox - qx
            dy = oy - qy
            c = dx * dx + dy * dy - r2
            if c <= 0.0:
                t = 0.0
                continue
            b = dx * ux + dy * uy
            if b < 0.0:
                disc = b * b - c
                if disc >= 0.0:
                    tq = -b - math.sqrt(disc)
                    if tq < t:
                        t = tq
        if t < 0.0:
            t = 0.0
        out.append(t)
    return tuple(out)


def begin_pause(state: MotionState, pause_steps: int) -> MotionState:
    return MotionState(Fsm.PAUSED_SAMPLING, state.steps_remaining, state.turn_remaining,
                       pause_steps, state.fsm)


def step_motion(state: MotionState, pose: Pose, config: MotionConfig,
                sensed: Sequence[float] | None, rng: np.random.Generator,
                others: Sequence[tuple[float, float]] = ()) -> tuple[MotionState, Pose]:
    """Advance one robot by one time step.

    ``others`` are the centres of the other robots; a forward move that would overlap
    one of them or cross a wall is truncated and forces an avoidance turn. ``sensed``
    may be ``None`` while paused.
    """
    if state.fsm == Fsm.PAUSED_SAMPLING:
        left = state.pause_remaining - 1
        if left > 0:
            return MotionState(Fsm.PAUSED_SAMPLING, state.steps_remaining,
                               state.turn_remaining, left, state.resume_fsm), pose
        return MotionState(state.resume_fsm, state.steps_remaining,
                           state.turn_remaining), pose

    fsm = state.fsm
    steps = state.steps_remaining
    turn = state.turn_remaining
    if fsm != Fsm.AVOIDING and min(sensed) < config.d_trigger_m:
        fsm = Fsm.AVOIDING
        turn = avoid_turn(sensed, config, rng)

    if fsm != Fsm.FORWARD:
        rate = config.turn_step
        if turn > rate:
            dh = rate
        elif turn < -rate:
            dh = -rate
        else:
            dh = turn
        pose = Pose(pose.x, pose.y, wrap_angle(pose.heading + dh))
        turn = turn - dh
        if turn == 0.0:
            fsm = Fsm.FORWARD
            steps = draw_forward_steps(config.s_max, rng, config.forward_distribution)
        return MotionState(fsm, steps, turn), pose

    r = config.r_body
    lo = r
    hi = config.side_m - r
    nx = pose.x + config.step_len * math.cos(pose.heading)
    ny = pose.y + config.step_len * math.sin(pose.heading)
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
    min_sep2 = 4.0 * r * r
    for qx, qy in others:
        dx = nx - qx
        dy = ny - qy
        if dx * dx + dy * dy < min_sep2:
            nx = pose.x
            ny = pose.y
            truncated = True
            break
    steps -= 1
    pose = Pose(nx, ny, pose.heading)
    if truncated:
        fsm = Fsm.AVOIDING
        turn = avoid_turn(sensed, config, rng)
    elif steps <= 0:
        fsm = Fsm.TURNING
        turn = draw_turn_angle(rng, config.turn_sigma, config.turn_bound)
    return MotionState(fsm, steps, turn), pose
