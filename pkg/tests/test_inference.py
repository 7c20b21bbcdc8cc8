import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import beta_cdf_binomial, beta_cdf_quad

from swarminspect.inference import (
    NO_SIDE,
    Belief,
    Decision,
    DecisionConstants,
    DecisionState,
    NotReady,
    cdf_at_theta,
    count_observation,
    expected_fill,
    mass_below,
    update_belief,
    update_decision,
)


def test_conjugate_counts():
    assert update_belief(Belief(0, 0), 1) == Belief(1, 0)
    assert update_belief(Belief(2, 1), 0) == Belief(2, 2)


def test_counting_is_order_independent():
    colours = [1] * 133 + [0] * 123
    for perm_seed in range(3):
        random.Random(perm_seed).shuffle(colours)
        b = Belief()
        for c in colours:
            b = update_belief(b, c)
        assert b == Belief(133, 123)


def test_rejects_non_binary_colour():
    with pytest.raises(ValueError):
        update_belief(Belief(), 2)


@pytest.mark.parametrize("a,b,want", [(1, 1, 0.5), (2, 1, 0.25), (1, 2, 0.75)])
def test_cdf_examples(a, b, want):
    assert cdf_at_theta(Belief(a, b), 0.5) == pytest.approx(want, abs=1e-12)


@pytest.mark.parametrize("a,b", [(0, 0), (0, 3), (3, 0)])
def test_cdf_not_ready_on_zero_count(a, b):
    with pytest.raises(NotReady):
        cdf_at_theta(Belief(a, b))


def test_point_mass_limits():
    assert mass_below(4, 0) == 0.0
    assert mass_below(0, 4) == 1.0
    assert mass_below(0, 0) is None
    assert mass_below(3, 2) == cdf_at_theta(Belief(3, 2))


@pytest.mark.parametrize("a,b", [(a, b) for a in range(1, 40, 3) for b in range(1, 40, 4)])
def test_cdf_matches_binomial_sum(a, b):
    for theta in (0.1, 0.5, 0.77):
        assert cdf_at_theta(Belief(a, b), theta) == pytest.approx(
            beta_cdf_binomial(a, b, theta), abs=1e-10)


@given(st.floats(0.2, 60), st.floats(0.2, 60), st.floats(0.01, 0.99))
@settings(max_examples=80, deadline=None)
def test_cdf_matches_quadrature(a, b, theta):
    assert cdf_at_theta(Belief(a, b), theta) == pytest.approx(
        beta_cdf_quad(a, b, theta), abs=1e-8)


def test_cdf_monotone_in_counts():
    for b in range(1, 20):
        vals = [cdf_at_theta(Belief(a, b)) for a in range(1, 20)]
        assert all(x > y for x, y in zip(vals, vals[1:]))
    for a in range(1, 20):
        vals = [cdf_at_theta(Belief(a, b)) for b in range(1, 20)]
        assert all(x < y for x, y in zip(vals, vals[1:]))


def test_expected_fill():
    assert expected_fill(Belief(1, 1)) == 0.5
    assert expected_fill(Belief(133, 123)) == pytest.approx(133 / 256)
    assert expected_fill(Belief(0, 5)) == 0.0
    with pytest.raises(NotReady):
        expected_fill(Belief(0, 0))


# --- decisions -------------------------------------------------------------

def _observe(ds, p, consts):
    return update_decision(count_observation(ds), p, consts)


def test_h0_decides_immediately():
    ds = update_decision(DecisionState(), 0.99, DecisionConstants(0.95, 0))
    assert ds.d_f == Decision.BLACK


def test_h0_white_side():
    ds = update_decision(DecisionState(), 0.01, DecisionConstants(0.95, 0))
    assert ds.d_f == Decision.WHITE


def test_dip_before_h_resets_pending():
    consts = DecisionConstants(0.95, 17)
    ds = DecisionState()
    for _ in range(17):  # the first favoured step sets o_i, then 16 more
        ds = _observe(ds, 0.99, consts)
    assert ds.d_f == Decision.UNDECIDED and ds.pending_side == Decision.BLACK
    assert ds.o_total - ds.o_i == 16
    ds = _observe(ds, 0.5, consts)
    assert ds.d_f == Decision.UNDECIDED
    assert ds.pending_side == NO_SIDE and ds.o_i == 0


def test_white_after_h_observations():
    consts = DecisionConstants(0.95, 17)
    ds = _observe(DecisionState(), 0.01, consts)
    o_i = ds.o_i
    while ds.o_total - o_i < 17:
        assert ds.d_f == Decision.UNDECIDED
        ds = _observe(ds, 0.01, consts)
    assert ds.d_f == Decision.WHITE


def test_switching_side_needs_fresh_h():
    consts = DecisionConstants(0.95, 3)
    ds = DecisionState()
    for _ in range(4):
        ds = _observe(ds, 0.99, consts)
    assert ds.d_f == Decision.BLACK
    for k in range(3):
        ds = _observe(ds, 0.01, consts)
        assert ds.d_f == Decision.BLACK
    ds = _observe(ds, 0.01, consts)
    assert ds.d_f == Decision.WHITE


def test_threshold_is_strict():
    ds = update_decision(DecisionState(), 0.95, DecisionConstants(0.95, 0))
    assert ds.d_f == Decision.UNDECIDED and ds.pending_side == NO_SIDE


@pytest.mark.parametrize("kw", [{"p_c": 0.5}, {"p_c": 1.0}, {"h": -1}, {"h": 129}])
def test_constants_validated(kw):
    with pytest.raises(ValueError):
        DecisionConstants(**kw)


def test_all_short_sequences_conjugate_with_prior():
    for n in range(0, 8):
        for seq in itertools.product((0, 1), repeat=n):
            b = Belief(0.5, 2.0)
            for c in seq:
                b = update_belief(b, c)
            assert b == Belief(0.5 + sum(seq), 2.0 + n - sum(seq))
