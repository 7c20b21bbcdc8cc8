"""Algorithm parameters, their search bounds, named presets and the run config."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

from .kinematics import DT_S, MotionConfig

TILE_SIDE_M = 1.0 / 16
TILE_CROSS_STEPS = 282  # steps to cross one tile at 2.77 cm/s
ARENA_CROSS_STEPS = 4515  # steps to cross the arena side
BOUND_MULTIPLIER = 5

# (lower, upper), inclusive
BOUNDS = {
    "tau": (TILE_CROSS_STEPS // BOUND_MULTIPLIER, TILE_CROSS_STEPS * BOUND_MULTIPLIER),
    "s": (TILE_CROSS_STEPS // BOUND_MULTIPLIER, ARENA_CROSS_STEPS * BOUND_MULTIPLIER),
    "d": (5, 145),
    "h": (0, 128),
}
TUNED = ("tau", "s", "d", "h")

HORIZON_S = 3600.0


class ParameterBoundsError(ValueError):
    pass


@dataclass(frozen=True)
class ParameterSet:
    alpha0: float = 0.0
    beta0: float = 0.0
    tau: int = 282
    s: int = 564
    d: int = 50
    h: int = 0
    p_c: float = 0.95
    feedback: bool = False

    def validate(self) -> "ParameterSet":
        for name in TUNED:
            lo, hi = BOUNDS[name]
            v = getattr(self, name)
            if not lo <= v <= hi:
                raise ParameterBoundsError(
                    f"{name}={v} is out of bounds: {name} must lie in [{lo}, {hi}]")
        if self.alpha0 < 0 or self.beta0 < 0:
            raise ParameterBoundsError("alpha0 and beta0 must be non-negative")
        if not 0.5 < self.p_c < 1.0:
            raise ParameterBoundsError(f"p_c={self.p_c} is out of bounds: p_c must lie in (0.5, 1)")
        return self

    def with_vector(self, vec) -> "ParameterSet":
        """Copy with (tau, s, d, h) taken from ``vec``."""
        tau, s, d, h = (int(v) for v in vec)
        return dataclasses.replace(self, tau=tau, s=s, d=d, h=h)

    def vector(self) -> tuple[int, int, int, int]:
        return (self.tau, self.s, self.d, self.h)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ParameterSet":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown parameter keys: {sorted(unknown)}")
        return cls(**_coerce(cls, data))


PRESETS = {
    "empirical": ParameterSet(tau=282, s=564, d=50, h=0),
    "optimized_uminus": ParameterSet(tau=56, s=178, d=29, h=17, feedback=False),
    "optimized_uplus": ParameterSet(tau=57, s=912, d=51, h=10, feedback=True),
}


@dataclass(frozen=True)
class SimConfig:
    n_robots: int = 4
    T_max: int = int(round(HORIZON_S / DT_S))
    fill: float = 0.52
    seed: int = 0
    pause_steps: int = 5
    sample_every: int = 125
    theta: float = 0.5
    count_received: bool = False
    broadcast_every_step: bool = False
    motion: MotionConfig = field(default_factory=MotionConfig)

    def validate(self) -> "SimConfig":
        if self.n_robots < 1:
            raise ValueError("n_robots must be at least 1")
        if self.T_max < 1:
            raise ValueError("T_max must be at least 1 step")
        if self.pause_steps < 1:
            raise ValueError("pause_steps must be at least 1")
        if self.sample_every < 1:
            raise ValueError("sample_every must be at least 1")
        if not 0.0 <= self.fill <= 1.0 or math.isnan(self.fill):
            raise ValueError(f"fill must lie in [0, 1], got {self.fill}")
        return self

    @property
    def horizon_s(self) -> float:
        return self.T_max * self.motion.dt

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["motion"].pop("sensor_angles", None)
        d["motion"]["sensor_angles_deg"] = list(self.motion.sensor_angles_deg)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "SimConfig":
        data = dict(data)
        motion = data.pop("motion", None) or {}
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        mknown = {f.name for f in dataclasses.fields(MotionConfig) if f.init}
        munknown = set(motion) - mknown
        if munknown:
            raise ValueError(f"unknown motion keys: {sorted(munknown)}")
        if "sensor_angles_deg" in motion:
            motion["sensor_angles_deg"] = tuple(float(a) for a in motion["sensor_angles_deg"])
        return cls(motion=MotionConfig(**_coerce(MotionConfig, motion)), **_coerce(cls, data))


def _coerce(cls, data: dict) -> dict:
    """Cast loosely typed config values (YAML ints for floats etc.) to field types."""
    casts = {"int": int, "float": float, "bool": _to_bool, "str": str}
    out = {}
    types = {f.name: f.type for f in dataclasses.fields(cls)}
    for k, v in data.items():
        cast = casts.get(str(types.get(k)))
        out[k] = cast(v) if cast is not None else v
    return out


def _to_bool(v) -> bool:
    if isinstance(v, str):
        low = v.strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {v!r}")
    return bool(v)
