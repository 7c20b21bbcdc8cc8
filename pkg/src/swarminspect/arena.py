"""Tiled binary arena: pattern generation, point queries and a text grid format."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .rng import PURPOSE_PATTERN, stream

TILES_PER_SIDE = 16
N_TILES = TILES_PER_SIDE * TILES_PER_SIDE
SIDE_M = 1.0

BLACK = 0
WHITE = 1


@dataclass(frozen=True)
class ArenaPattern:
    """A square arena of ``tiles_per_side``² black (0) / white (1) tiles.

    ``tiles[row, col]`` holds the colour of the tile spanning
    ``x ∈ [col·w, (col+1)·w]`` and ``y ∈ [row·w, (row+1)·w]`` with ``w`` the tile side.
    """

    tiles: np.ndarray
    nominal_fill: float
    side_m: float = SIDE_M

    def __post_init__(self):
        tiles = np.ascontiguousarray(self.tiles, dtype=np.uint8)
        if tiles.ndim != 2 or tiles.shape[0] != tiles.shape[1]:
            raise ValueError(f"tiles must be a square grid, got shape {tiles.shape}")
        if np.any(tiles > 1):
            raise ValueError("tiles must be binary")
        tiles.setflags(write=False)
        object.__setattr__(self, "tiles", tiles)

    @property
    def tiles_per_side(self) -> int:
        return self.tiles.shape[0]

    @property
    def tile_side(self) -> float:
        return self.side_m / self.tiles_per_side

    @property
    def n_white(self) -> int:
        return int(self.tiles.sum())

    @property
    def actual_fill(self) -> float:
        return self.n_white / self.tiles.size

    @property
    def majority(self) -> int:
        """Ground-truth label: WHITE iff strictly more than half the tiles are white."""
        return WHITE if self.actual_fill > 0.5 else BLACK

    def to_text(self) -> str:
        return "".join("".join(str(c) for c in row) + "\n" for row in self.tiles)

    @classmethod
    def from_text(cls, text: str, nominal_fill: float | None = None) -> "ArenaPattern":
        rows = [line.strip() for line in text.splitlines() if line.strip()]
        if any(set(r) - {"0", "1"} for r in rows):
            raise ValueError("pattern text may only contain '0' and '1'")
        if any(len(r) != len(rows) for r in rows):
            raise ValueError("pattern text must be a square grid")
        tiles = np.array([[int(c) for c in r] for r in rows], dtype=np.uint8)
        fill = tiles.mean() if nominal_fill is None else nominal_fill
        return cls(tiles=tiles, nominal_fill=float(fill))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_text())

    @classmethod
    def load(cls, path: str | Path) -> "ArenaPattern":
        return cls.from_text(Path(path).read_text())


def white_count(fill: float, n_tiles: int = N_TILES) -> int:
    """Number of white tiles for ``fill``, rounding half up."""
    return int(math.floor(fill * n_tiles + 0.5))


def generate_pattern(fill: float, seed: int, tiles_per_side: int = TILES_PER_SIDE,
                     side_m: float = SIDE_M) -> ArenaPattern:
    """Place exactly ``round(fill · N)`` white tiles uniformly at random."""
    if not 0.0 <= fill <= 1.0 or math.isnan(fill):
        raise ValueError(f"fill must lie in [0, 1], got {fill}")
    n = tiles_per_side * tiles_per_side
    k = white_count(fill, n)
    order = stream(seed, PURPOSE_PATTERN).permutation(n)
    flat = np.zeros(n, dtype=np.uint8)
    flat[order[:k]] = WHITE
    return ArenaPattern(tiles=flat.reshape(tiles_per_side, tiles_per_side),
                        nominal_fill=float(fill), side_m=side_m)


def tile_index(coord: float, tile_side: float, tiles_per_side: int) -> int:
    # a point on a tile edge belongs to the lower-index tile
    i = int(math.ceil(coord / tile_side)) - 1
    if i < 0:
        return 0
    if i >= tiles_per_side:
        return tiles_per_side - 1
    return i


def color_at(pattern: ArenaPattern, x: float, y: float) -> int:
    if not (0.0 <= x <= pattern.side_m and 0.0 <= y <= pattern.side_m):
        raise ValueError(f"point ({x}, {y}) lies outside the arena")
    w = pattern.tile_side
    n = pattern.tiles_per_side
    return int(pattern.tiles[tile_index(y, w, n), tile_index(x, w, n)])


def checkerboard(tiles_per_side: int = TILES_PER_SIDE) -> ArenaPattern:
    idx = np.add.outer(np.arange(tiles_per_side), np.arange(tiles_per_side))
    return ArenaPattern(tiles=(idx % 2).astype(np.uint8), nominal_fill=0.5)
