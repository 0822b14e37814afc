"""Threshold-voltage channel with cell-to-cell interference.

Cells are programmed to Gaussian threshold voltages per level. Every cell is
then shifted by the coupling-weighted programming shifts of its eight
neighbours:

    shift = gx* (x neighbours) + gy (y neighbours) + gxy (diagonals)

with gx* = alpha * gamma_x + beta and gy, gxy the alpha-scaled capacitive
ratios. Read-back uses decision levels placed at the valleys of the measured
voltage histogram.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Dict, List, Sequence, Tuple

import numpy as np

from nandcode.epattern import StateGrid
from nandcode.exceptions import ChannelError, RangeError

logger = logging.getLogger(__name__)

# Capacitive coupling ratios before alpha scaling
BASE_GAMMA_X = 0.1
BASE_GAMMA_Y = 0.08
BASE_GAMMA_XY = 0.006

HISTOGRAM_BIN_WIDTH = 0.02
HISTOGRAM_MARGIN = 0.5
HISTOGRAM_SMOOTHING = 5


@dataclass(frozen=True)
class CouplingParams:
    """Coupling ratios of the interference model.

    ``gamma_*`` are capacitive ratios scaled by ``alpha``; ``beta`` is the
    direct-field x coupling added after scaling. ``delta_v_e_ph`` is the
    programming shift of a PH aggressor; shifts of intermediate levels scale
    with it proportionally.
    """

    gamma_x: float = BASE_GAMMA_X
    gamma_y: float = BASE_GAMMA_Y
    gamma_xy: float = BASE_GAMMA_XY
    beta: float = 0.0
    alpha: float = 1.0
    delta_v_e_ph: float = 2.0

    def __post_init__(self) -> None:
        values = (self.gamma_x, self.gamma_y, self.gamma_xy, self.beta, self.alpha, self.delta_v_e_ph)
        if any(v < 0 for v in values):
            raise ChannelError(f"Coupling parameters must be non-negative: {self}")

    @classmethod
    def scaled(cls, alpha: float, beta: float = 0.0, delta_v_e_ph: float = 2.0) -> "CouplingParams":
        """alpha * (0.1, 0.08, 0.006) capacitive ratios plus direct coupling beta."""
        return cls(alpha=alpha, beta=beta, delta_v_e_ph=delta_v_e_ph)

    @classmethod
    def effective(
        cls,
        gamma_x_star: float,
        gamma_y: float = 0.0,
        gamma_xy: float = 0.0,
        delta_v_e_ph: float = 2.0,
    ) -> "CouplingParams":
        """Coupling given directly by its effective ratios."""
        return cls(gamma_x=gamma_x_star, gamma_y=gamma_y, gamma_xy=gamma_xy, beta=0.0, alpha=1.0, delta_v_e_ph=delta_v_e_ph)

    @property
    def gamma_x_star(self) -> float:
        return self.alpha * self.gamma_x + self.beta

    @property
    def effective_gamma_y(self) -> float:
        return self.alpha * self.gamma_y

    @property
    def effective_gamma_xy(self) -> float:
        return self.alpha * self.gamma_xy


@dataclass(frozen=True)
class StateDistribution:
    """Gaussian threshold-voltage distribution of each program level."""

    means: Tuple[float, ...]
    std_devs: Tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.means) != len(self.std_devs) or len(self.means) < 2:
            raise ChannelError("A distribution needs matching means and std_devs for at least 2 levels")
        if any(s <= 0 for s in self.std_devs):
            raise ChannelError(f"Standard deviations must be positive: {self.std_devs}")
        if any(b <= a for a, b in zip(self.means, self.means[1:])):
            raise ChannelError(f"Level means must be strictly increasing: {self.means}")

    @classmethod
    def evenly_spaced(
        cls, m_bits: int, e_mean: float = -1.0, spacing: float = 2.0, sigma: float = 0.25
    ) -> "StateDistribution":
        """Levels at e_mean, e_mean + spacing, ... with a common sigma.

        For m_bits=1 the defaults give N(-1, 0.25^2) and N(1, 0.25^2).
        """
        q = 1 << m_bits
        return cls(
            means=tuple(e_mean + spacing * level for level in range(q)),
            std_devs=(sigma,) * q,
        )

    @property
    def levels(self) -> int:
        return len(self.means)


@dataclass(frozen=True, eq=False)
class CellGrid:
    """Programmed cells with their nominal voltages and interference shifts."""

    states: StateGrid
    v_nominal: np.ndarray = field(repr=False)
    shift: np.ndarray = field(repr=False)
    level_shifts: np.ndarray = field(repr=False)

    @property
    def v_actual(self) -> np.ndarray:
        return self.v_nominal + self.shift


def program_grid(states: StateGrid, dist: StateDistribution, seed: int) -> CellGrid:
    """Draw each cell's voltage from its level's Gaussian; shifts start at 0."""
    levels = states.levels
    if levels.size and levels.max() >= dist.levels:
        raise ChannelError(f"Distribution covers {dist.levels} levels, grid uses level {int(levels.max())}")
    rng = np.random.default_rng(seed)
    means = np.asarray(dist.means)
    stds = np.asarray(dist.std_devs)
    v_nominal = means[levels] + stds[levels] * rng.standard_normal(levels.shape)
    return CellGrid(
        states=states,
        v_nominal=v_nominal,
        shift=np.zeros(levels.shape),
        level_shifts=means - means[0],
    )


def aggressor_shift(level: int, dist: StateDistribution) -> float:
    """Programming shift from E to the given level."""
    if not 0 <= level < dist.levels:
        raise RangeError(f"Level {level} is outside [0, {dist.levels - 1}]")
    return float(dist.means[level] - dist.means[0])


def apply_interference(g: CellGrid, p: CouplingParams) -> CellGrid:
    """Superpose neighbour coupling onto every cell (single pass).

    Neighbour shifts are the programming shifts of their final levels,
    rescaled so a PH aggressor moves by ``p.delta_v_e_ph``. Cells outside
    the grid contribute nothing.
    """
    ph_shift = g.level_shifts[-1]
    scale = p.delta_v_e_ph / ph_shift if ph_shift > 0 else 0.0
    aggressor = np.pad(g.level_shifts[g.states.levels] * scale, 1)

    x_sum = aggressor[1:-1, :-2] + aggressor[1:-1, 2:]
    y_sum = aggressor[:-2, 1:-1] + aggressor[2:, 1:-1]
    xy_sum = aggressor[:-2, :-2] + aggressor[:-2, 2:] + aggressor[2:, :-2] + aggressor[2:, 2:]
    shift = p.gamma_x_star * x_sum + p.effective_gamma_y * y_sum + p.effective_gamma_xy * xy_sum
    return replace(g, shift=shift)


def max_shift(p: CouplingParams) -> float:
    """Worst-case victim shift, reached by a (2, 2, 4) E-PH pattern."""
    return (2 * p.gamma_x_star + 2 * p.effective_gamma_y + 4 * p.effective_gamma_xy) * p.delta_v_e_ph


def shift_histogram(g: CellGrid, level: int = 0, decimals: int = 9) -> Dict[float, float]:
    """Empirical distribution of interference shifts over cells of one level."""
    shifts = g.shift[g.states.levels == level]
    if shifts.size == 0:
        return {}
    values, counts = np.unique(np.round(shifts, decimals), return_counts=True)
    return {float(v): c / shifts.size for v, c in zip(values, counts)}


def voltage_histogram(
    voltages: np.ndarray, bin_width: float = HISTOGRAM_BIN_WIDTH
) -> Tuple[np.ndarray, np.ndarray]:
    """Histogram over [min - 0.5, max + 0.5] with fixed-width bins.

    Returns:
        (bin edges, counts)
    """
    lo = float(voltages.min()) - HISTOGRAM_MARGIN
    hi = float(voltages.max()) + HISTOGRAM_MARGIN
    n_bins = int(np.ceil((hi - lo) / bin_width))
    edges = lo + bin_width * np.arange(n_bins + 1)
    counts, _ = np.histogram(voltages, bins=edges)
    return edges, counts


def estimate_thresholds(voltages: Sequence[float], dist: StateDistribution) -> List[float]:
    """Decision levels at the histogram valleys between adjacent level means.

    The histogram is smoothed with a 5-bin moving sum. Between each pair of
    level means the bin with the smallest smoothed count wins; among equal
    minima the bin closest to the midpoint of the two means is taken, and an
    exact tie goes to the lower voltage.
    """
    v = np.asarray(voltages, dtype=float).ravel()
    if v.size == 0:
        raise ChannelError("Cannot estimate thresholds from an empty voltage list")

    edges, counts = voltage_histogram(v)
    smooth = np.convolve(counts, np.ones(HISTOGRAM_SMOOTHING, dtype=np.int64), mode="same")
    centres = edges[:-1] + HISTOGRAM_BIN_WIDTH / 2

    thresholds: List[float] = []
    for lower, upper in zip(dist.means, dist.means[1:]):
        midpoint = (lower + upper) / 2
        inside = np.flatnonzero((centres > lower) & (centres < upper))
        if inside.size == 0:
            logger.warning(f"No histogram bins between {lower} and {upper}; using the midpoint")
            thresholds.append(midpoint)
            continue
        minimal = inside[smooth[inside] == smooth[inside].min()]
        best = minimal[np.argmin(np.abs(centres[minimal] - midpoint))]
        thresholds.append(float(centres[best]))
    return thresholds


def read_hard(g: CellGrid, thresholds: Sequence[float]) -> StateGrid:
    """Hard-decision read: a cell's level is the number of thresholds strictly below it."""
    t = np.asarray(thresholds, dtype=float)
    expected = (1 << g.states.m_bits) - 1
    if t.size != expected:
        raise RangeError(f"Expected {expected} thresholds, got {t.size}")
    if np.any(np.diff(t) <= 0):
        raise RangeError(f"Thresholds must be strictly increasing: {t.tolist()}")
    levels = np.searchsorted(t, g.v_actual, side="left")
    return StateGrid(m_bits=g.states.m_bits, levels=levels)
