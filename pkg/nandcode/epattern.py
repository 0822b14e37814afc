"""E-PH pattern classification over cell grids.

A victim is a cell in the erase state E (level 0). Its (n_x, n_y, n_xy)
class counts the neighbours in the highest program state PH along the word
line, across word lines and on the diagonals. Cells outside the grid count
as non-PH.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from nandcode.exceptions import RangeError
from nandcode.constrained_codes import MAX_M_BITS

logger = logging.getLogger(__name__)


@dataclass(frozen=True, order=True)
class PatternClass:
    """An (n_x, n_y, n_xy) E-PH pattern."""

    n_x: int
    n_y: int
    n_xy: int

    def __post_init__(self) -> None:
        if not (0 <= self.n_x <= 2 and 0 <= self.n_y <= 2 and 0 <= self.n_xy <= 4):
            raise RangeError(f"Invalid pattern class ({self.n_x}, {self.n_y}, {self.n_xy})")


@dataclass(frozen=True, eq=False)
class StateGrid:
    """Programmed levels of a block; rows are word lines, columns bit lines."""

    m_bits: int
    levels: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        if not 1 <= self.m_bits <= MAX_M_BITS:
            raise RangeError(f"m_bits must be between 1 and {MAX_M_BITS}, got {self.m_bits}")
        levels = np.atleast_2d(np.asarray(self.levels, dtype=np.int16))
        if levels.ndim != 2:
            raise RangeError(f"Levels must form a 2-D grid, got shape {levels.shape}")
        if levels.size and (levels.min() < 0 or levels.max() > self.ph):
            raise RangeError(f"Levels must lie in [0, {self.ph}]")
        object.__setattr__(self, "levels", levels)

    @property
    def ph(self) -> int:
        return (1 << self.m_bits) - 1

    @property
    def shape(self) -> Tuple[int, int]:
        return self.levels.shape  # type: ignore[return-value]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, StateGrid):
            return NotImplemented
        return self.m_bits == other.m_bits and np.array_equal(self.levels, other.levels)


def _neighbour_counts(grid: StateGrid) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """PH neighbour counts for every cell, with the grid padded by E."""
    ph = np.pad(grid.levels == grid.ph, 1, constant_values=False).astype(np.int8)
    n_x = ph[1:-1, :-2] + ph[1:-1, 2:]
    n_y = ph[:-2, 1:-1] + ph[2:, 1:-1]
    n_xy = ph[:-2, :-2] + ph[:-2, 2:] + ph[2:, :-2] + ph[2:, 2:]
    return n_x, n_y, n_xy


def classify_victim(g: StateGrid, i: int, j: int) -> Optional[PatternClass]:
    """Pattern class of cell (i, j), or None when the cell is not in E."""
    rows, cols = g.shape
    if not (0 <= i < rows and 0 <= j < cols):
        raise RangeError(f"Cell ({i}, {j}) is outside the {rows}x{cols} grid")
    if g.levels[i, j] != 0:
        return None

    def is_ph(r: int, c: int) -> int:
        return int(0 <= r < rows and 0 <= c < cols and g.levels[r, c] == g.ph)

    n_x = is_ph(i, j - 1) + is_ph(i, j + 1)
    n_y = is_ph(i - 1, j) + is_ph(i + 1, j)
    n_xy = is_ph(i - 1, j - 1) + is_ph(i - 1, j + 1) + is_ph(i + 1, j - 1) + is_ph(i + 1, j + 1)
    return PatternClass(n_x, n_y, n_xy)


@dataclass
class PatternTally:
    """Counts of E-PH classes over the E cells of one or more grids."""

    counts: Dict[PatternClass, int] = field(default_factory=dict)
    e_cells: int = 0

    def merge(self, other: "PatternTally") -> "PatternTally":
        """Associative merge, for row-parallel tallies."""
        merged = dict(self.counts)
        for cls, n in other.counts.items():
            merged[cls] = merged.get(cls, 0) + n
        return PatternTally(counts=merged, e_cells=self.e_cells + other.e_cells)

    def total(self, n_x: Optional[int] = None, min_n_x: Optional[int] = None) -> int:
        """Number of victims, optionally restricted by n_x."""
        return sum(
            n
            for cls, n in self.counts.items()
            if (n_x is None or cls.n_x == n_x) and (min_n_x is None or cls.n_x >= min_n_x)
        )

    def fraction(self, cls: PatternClass) -> float:
        return self.counts.get(cls, 0) / self.e_cells if self.e_cells else 0.0


def count_patterns(g: StateGrid) -> PatternTally:
    """Tally the pattern class of every E cell, (0, 0, 0) included."""
    n_x, n_y, n_xy = _neighbour_counts(g)
    victims = g.levels == 0
    codes = (n_x[victims].astype(np.int64) * 3 + n_y[victims]) * 5 + n_xy[victims]
    values, freq = np.unique(codes, return_counts=True)

    counts: Dict[PatternClass, int] = {}
    for code, n in zip(values.tolist(), freq.tolist()):
        counts[PatternClass(code // 15, (code // 5) % 3, code % 5)] = int(n)
    return PatternTally(counts=dict(sorted(counts.items())), e_cells=int(victims.sum()))


def num_pattern_classes(neighborhood: Sequence[int]) -> int:
    """Number of classes when each axis group contributes 0..bound aggressors."""
    if any(b < 0 for b in neighborhood):
        raise RangeError(f"Axis bounds must be non-negative: {list(neighborhood)}")
    return math.prod(b + 1 for b in neighborhood)
