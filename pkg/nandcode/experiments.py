"""Monte-Carlo experiments behind the CLI commands.

Each trial draws fresh user data and cell noise from seeds derived from
``base_seed + trial``, writes one grid, applies interference, re-estimates
the decision levels from that trial's own voltages, reads back and decodes.
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial
from typing import Any, Dict, List, Tuple

import numpy as np
from scipy.stats import norm

from nandcode.channel import (
    CouplingParams,
    StateDistribution,
    aggressor_shift,
    apply_interference,
    estimate_thresholds,
    program_grid,
    read_hard,
    voltage_histogram,
)
from nandcode.config import RunSpec, SweepConfig
from nandcode.epattern import PatternTally, StateGrid, count_patterns
from nandcode.pipeline import (
    SCHEME_PRESETS,
    SchemeConfig,
    conventional_preset,
    decode_read,
    encode_write,
    random_user_data,
    scheme_config,
)

logger = logging.getLogger(__name__)


def wilson_interval(failures: int, n: int, confidence: float = 0.95) -> Tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if n == 0:
        return 0.0, 1.0
    z = float(norm.ppf(0.5 + confidence / 2))
    p = failures / n
    denom = 1 + z**2 / n
    centre = (p + z**2 / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z**2 / (4 * n**2)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


@dataclass(frozen=True)
class TrialOutcome:
    codewords: int
    failures: int
    cells: int
    cell_errors: int


def trial_seeds(trial_seed: int) -> Tuple[int, int]:
    """Independent (data, noise) seeds for one trial."""
    data_seed, noise_seed = np.random.SeedSequence(trial_seed).generate_state(2)
    return int(data_seed), int(noise_seed)


def run_trial(cfg: SchemeConfig, trial_seed: int) -> TrialOutcome:
    """Write, disturb, read and decode one grid of random data."""
    data_seed, noise_seed = trial_seeds(trial_seed)
    user_data = random_user_data(cfg, np.random.default_rng(data_seed))
    states, record = encode_write(user_data, cfg, seed=trial_seed)

    assert cfg.dist is not None
    cells = apply_interference(program_grid(states, cfg.dist, seed=noise_seed), cfg.coupling)
    thresholds = estimate_thresholds(cells.v_actual, cfg.dist)
    read = read_hard(cells, thresholds)
    result = decode_read(read, record, cfg)
    return TrialOutcome(
        codewords=result.codewords,
        failures=result.failures,
        cells=states.levels.size,
        cell_errors=int(np.count_nonzero(read.levels != states.levels)),
    )


@dataclass(frozen=True)
class SweepPoint:
    """Aggregated trials of one run at one coupling value."""

    label: str
    scheme: str
    ecc: str
    interleave: bool
    gamma_x_star: float
    trials: int
    codewords: int
    failures: int
    cells: int
    cell_errors: int

    @property
    def wer(self) -> float:
        return self.failures / self.codewords if self.codewords else 0.0

    @property
    def bit_error_rate(self) -> float:
        return self.cell_errors / self.cells if self.cells else 0.0

    @property
    def interval(self) -> Tuple[float, float]:
        return wilson_interval(self.failures, self.codewords)

    def as_row(self) -> Dict[str, object]:
        low, high = self.interval
        return {
            "gamma_x_star": self.gamma_x_star,
            "scheme": self.label,
            "wer": self.wer,
            "trials": self.trials,
            "wilson_interval_low": low,
            "wilson_interval_high": high,
            "preset": self.scheme,
            "ecc": self.ecc,
            "interleave": "on" if self.interleave else "off",
            "codewords": self.codewords,
            "failures": self.failures,
            "bit_error_rate": self.bit_error_rate,
        }


def channel_distribution(config: SweepConfig, m_bits: int) -> StateDistribution:
    ch = config.channel
    return StateDistribution.evenly_spaced(m_bits, e_mean=ch.e_mean, spacing=ch.spacing, sigma=ch.sigma)


def run_config(run: RunSpec, gamma_x_star: float, config: SweepConfig) -> SchemeConfig:
    """Scheme configuration of one sweep point."""
    dist = channel_distribution(config, SCHEME_PRESETS[run.scheme].m_bits)
    coupling = CouplingParams.effective(
        gamma_x_star,
        gamma_y=config.channel.gamma_y,
        gamma_xy=config.channel.gamma_xy,
        delta_v_e_ph=aggressor_shift(dist.levels - 1, dist),
    )
    return scheme_config(
        run.scheme,
        ecc=run.ecc,
        interleave=run.interleave,
        coupling=coupling,
        dist=dist,
        rows=config.rows,
        codewords_per_page=config.codewords_per_page,
    )


def run_point(task: Tuple[RunSpec, float], config: SweepConfig) -> SweepPoint:
    run, gamma = task
    cfg = run_config(run, gamma, config)
    codewords = failures = cells = cell_errors = 0
    for trial in range(config.trials):
        outcome = run_trial(cfg, config.seed + trial)
        codewords += outcome.codewords
        failures += outcome.failures
        cells += outcome.cells
        cell_errors += outcome.cell_errors

    point = SweepPoint(
        label=run.label,
        scheme=run.scheme,
        ecc=run.ecc,
        interleave=run.interleave,
        gamma_x_star=gamma,
        trials=config.trials,
        codewords=codewords,
        failures=failures,
        cells=cells,
        cell_errors=cell_errors,
    )
    logger.info(f"{run.label} gamma_x*={gamma}: WER {point.wer:.3e} ({failures}/{codewords})")
    return point


def run_sweep(config: SweepConfig) -> List[SweepPoint]:
    """Evaluate every (run, gamma_x*) point, ordered by run label then gamma_x*."""
    tasks = sorted(
        ((run, gamma) for run in config.runs for gamma in config.gamma_x_star),
        key=lambda task: (task[0].label, task[1]),
    )
    logger.info(f"Sweeping {len(tasks)} points with {config.trials} trials each")
    worker = partial(run_point, config=config)
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            return list(pool.map(worker, tasks))
    return [worker(task) for task in tasks]


def pass_through_grid(
    preset: str, rows: int, cols: int, seed: int, **kwargs: Any
) -> Tuple[SchemeConfig, StateGrid]:
    """Random pass-through data of one preset written to a rows x cols grid."""
    cfg = scheme_config(preset, rows=rows, cols=cols, **kwargs)
    user_data = random_user_data(cfg, np.random.default_rng(seed))
    states, _ = encode_write(user_data, cfg, seed=seed)
    return cfg, states


def pattern_table(preset: str, rows: int, cols: int, seed: int) -> PatternTally:
    """E-PH class tally of a random pass-through grid."""
    _, states = pass_through_grid(preset, rows, cols, seed)
    return count_patterns(states)


def distribution_table(
    preset: str,
    coupling: CouplingParams,
    dist: StateDistribution,
    rows: int,
    cols: int,
    seed: int,
) -> Tuple[List[str], List[List[float]]]:
    """Voltage histograms per level before and after interference.

    The modulated preset is compared with the conventional scheme of the
    same bits per cell, both storing random data.

    Returns:
        (header, rows) of the histogram table.
    """
    m_bits = int(math.log2(dist.levels))
    voltages: Dict[str, Tuple[np.ndarray, np.ndarray, np.ndarray]] = {}
    for label, name in (("conventional", conventional_preset(m_bits)), ("modulation", preset)):
        _, states = pass_through_grid(name, rows, cols, seed, dist=dist)
        programmed = program_grid(states, dist, seed=seed)
        disturbed = apply_interference(programmed, coupling)
        voltages[label] = (states.levels, programmed.v_actual, disturbed.v_actual)

    everything = np.concatenate([np.concatenate((v[1].ravel(), v[2].ravel())) for v in voltages.values()])
    edges, _ = voltage_histogram(everything)
    centres = (edges[:-1] + edges[1:]) / 2

    header = ["voltage_bin_center"]
    columns = [centres]
    for label, (levels, before, after) in voltages.items():
        for phase, volts in (("before", before), ("after", after)):
            for level in range(dist.levels):
                header.append(f"{label}_{phase}_S{level}")
                counts, _ = np.histogram(volts[levels == level], bins=edges)
                columns.append(counts)
    table = [[float(c[i]) if j == 0 else int(c[i]) for j, c in enumerate(columns)] for i in range(centres.size)]
    return header, table
