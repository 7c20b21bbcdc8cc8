import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from swarminspect.arena import (
    BLACK,
    N_TILES,
    WHITE,
    ArenaPattern,
    checkerboard,
    color_at,
    generate_pattern,
    tile_index,
)


def test_zero_fill_is_all_black():
    p = generate_pattern(0.0, 99)
    assert p.n_white == 0 and p.actual_fill == 0.0


def test_full_fill_is_all_white():
    p = generate_pattern(1.0, 5)
    assert p.n_white == N_TILES and p.actual_fill == 1.0


def test_fill_052_has_133_white_tiles():
    p = generate_pattern(0.52, 1)
    # count by hand rather than trusting n_white
    white = sum(1 for row in p.to_text().split() for ch in row if ch == "1")
    assert white == 133
    assert p.actual_fill == pytest.approx(133 / 256)


@pytest.mark.parametrize("fill", [-0.01, 1.01, float("nan")])
def test_rejects_fill_outside_unit_interval(fill):
    with pytest.raises(ValueError):
        generate_pattern(fill, 0)


def test_same_seed_same_pattern():
    a = generate_pattern(0.6, 42)
    b = generate_pattern(0.6, 42)
    assert np.array_equal(a.tiles, b.tiles)
    assert not np.array_equal(a.tiles, generate_pattern(0.6, 43).tiles)


@given(st.floats(0, 1), st.integers(0, 2**32))
@settings(max_examples=60, deadline=None)
def test_fill_rounding_within_half_tile(fill, seed):
    p = generate_pattern(fill, seed)
    assert abs(p.actual_fill - fill) <= 1 / 512 + 1e-12


@given(st.floats(0.05, 0.95), st.integers(0, 2**32), st.integers(0, 2**32))
@settings(max_examples=30, deadline=None)
def test_colour_multiset_depends_only_on_fill(fill, s1, s2):
    assert generate_pattern(fill, s1).n_white == generate_pattern(fill, s2).n_white


def test_tile_side():
    assert generate_pattern(0.5, 0).tile_side == pytest.approx(0.0625)


def test_color_at_uniform_patterns():
    assert color_at(generate_pattern(1.0, 0), 0.5, 0.5) == WHITE
    assert color_at(generate_pattern(0.0, 0), 0.01, 0.99) == BLACK


def test_checkerboard_neighbours_differ():
    cb = checkerboard()
    # tile (0,0) vs (1,0): floor(0.03/0.0625)=0, floor(0.09/0.0625)=1
    assert color_at(cb, 0.03, 0.03) != color_at(cb, 0.09, 0.03)


def test_boundary_points_go_to_lower_tile():
    assert tile_index(0.0625, 0.0625, 16) == 0
    assert tile_index(0.0625 + 1e-12, 0.0625, 16) == 1
    assert tile_index(0.0, 0.0625, 16) == 0
    assert tile_index(1.0, 0.0625, 16) == 15


def test_color_at_rejects_outside_points():
    p = generate_pattern(0.5, 0)
    with pytest.raises(ValueError):
        color_at(p, 1.01, 0.5)
    with pytest.raises(ValueError):
        color_at(p, 0.5, -0.001)


def test_color_at_is_pure():
    p = generate_pattern(0.52, 3)
    assert [color_at(p, 0.3, 0.7) for _ in range(5)] == [color_at(p, 0.3, 0.7)] * 5


def test_point_sampling_converges_to_actual_fill():
    p = generate_pattern(0.52, 11)
    rng = np.random.default_rng(0)
    pts = rng.random((10_000, 2))
    frac = np.mean([color_at(p, x, y) for x, y in pts])
    se = np.sqrt(p.actual_fill * (1 - p.actual_fill) / len(pts))
    assert abs(frac - p.actual_fill) < 3 * se


def test_text_round_trip(tmp_path):
    p = generate_pattern(0.3, 8)
    p.save(tmp_path / "p.txt")
    q = ArenaPattern.load(tmp_path / "p.txt")
    assert np.array_equal(p.tiles, q.tiles)
    assert q.majority == BLACK


def test_tiles_are_read_only():
    p = generate_pattern(0.3, 8)
    with pytest.raises(ValueError):
        p.tiles[0, 0] = 1
