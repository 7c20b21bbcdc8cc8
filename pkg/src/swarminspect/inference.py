"""Beta-Bernoulli belief over the fill ratio and the hysteresis decision rule."""

from __future__ import annotations

import enum
from dataclasses import dataclass

from scipy.special import betainc


class NotReady(ValueError):
    """The posterior is not a proper Beta distribution yet (a zero count)."""


class Decision(enum.IntEnum):
    UNDECIDED = -1
    BLACK = 0
    WHITE = 1


NO_SIDE = -1


@dataclass(frozen=True)
class Belief:
    alpha: float = 0.0
    beta: float = 0.0


@dataclass(frozen=True)
class DecisionState:
    d_f: int = Decision.UNDECIDED
    o_total: int = 0
    o_i: int = 0
    pending_side: int = NO_SIDE


@dataclass(frozen=True)
class DecisionConstants:
    p_c: float = 0.95
    h: int = 0
    theta: float = 0.5

    def __post_init__(self):
        if not 0.5 < self.p_c < 1.0:
            raise ValueError(f"p_c must lie in (0.5, 1), got {self.p_c}")
        if not 0 <= self.h <= 128:
            raise ValueError(f"h must lie in [0, 128], got {self.h}")
        if not 0.0 < self.theta < 1.0:
            raise ValueError(f"theta must lie in (0, 1), got {self.theta}")


def update_belief(b: Belief, color: int) -> Belief:
    if color not in (0, 1):
        raise ValueError(f"color must be 0 or 1, got {color!r}")
    return Belief(b.alpha + color, b.beta + (1 - color))


def cdf_at_theta(b: Belief, theta: float = 0.5) -> float:
    """P(f < theta) under Beta(alpha, beta), the regularized incomplete beta."""
    if b.alpha <= 0 or b.beta <= 0:
        raise NotReady(f"Beta({b.alpha}, {b.beta}) is improper")
    return float(betainc(b.alpha, b.beta, theta))


def mass_below(alpha: float, beta: float, theta: float = 0.5) -> float | None:
    """``cdf_at_theta`` extended to the point-mass limits used for decisions.

    With one count at zero the posterior has collapsed onto 0 or 1. Returns ``None``
    while both counts are zero.
    """
    if alpha > 0.0:
        if beta > 0.0:
            return float(betainc(alpha, beta, theta))
        return 0.0
    if beta > 0.0:
        return 1.0
    return None


def update_decision(ds: DecisionState, p: float, consts: DecisionConstants) -> DecisionState:
    """Apply the credibility threshold with hysteresis.

    ``p`` is P(f < theta). A side is favoured once its posterior mass exceeds ``p_c``;
    the decision moves to that side only after ``h`` further observations with the
    side continuously favoured. Losing the favour resets the counter.
    """
    if p > consts.p_c:
        side = Decision.BLACK
    elif 1.0 - p > consts.p_c:
        side = Decision.WHITE
    else:
        return DecisionState(ds.d_f, ds.o_total, 0, NO_SIDE)

    o_i = ds.o_i
    if ds.pending_side != side:
        o_i = ds.o_total
    d_f = ds.d_f
    if d_f != side and ds.o_total - o_i >= consts.h:
        d_f = int(side)
    return DecisionState(d_f, ds.o_total, o_i, int(side))


def count_observation(ds: DecisionState) -> DecisionState:
    return DecisionState(ds.d_f, ds.o_total + 1, ds.o_i, ds.pending_side)


def expected_fill(b: Belief) -> float:
    total = b.alpha + b.beta
    if total <= 0:
        raise NotReady("no colours integrated yet")
    return b.alpha / total
