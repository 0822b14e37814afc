"""Command-line interface: capacity tables, codebooks, pattern statistics,
voltage histograms and WER sweeps.

Tables are written as CSV (header row, LF line endings) to ``--out`` or to
standard output; the codebook command writes the codebook file and prints a
JSON verification report.
"""

import argparse
import csv
import json
import logging
import math
import os
import sys
from dataclasses import replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

from nandcode import __version__
from nandcode.channel import (
    BASE_GAMMA_XY,
    BASE_GAMMA_Y,
    CouplingParams,
    StateDistribution,
    aggressor_shift,
)
from nandcode.config import (
    ChannelSettings,
    SweepConfig,
    load_config,
    parse_flag,
    with_overrides,
)
from nandcode.constrained_codes import (
    CODEBOOK_PRESETS,
    expected_junction_rate,
    junction_statistics,
    preset_codebook,
    subset_counts,
    write_codebook,
)
from nandcode.ecc import NO_ECC
from nandcode.experiments import (
    SweepPoint,
    channel_distribution,
    distribution_table,
    pattern_table,
    run_sweep,
)
from nandcode.pipeline import (
    SCHEME_PRESETS,
    RLL_RATE,
    eph_free_capacity,
    rll_d1_capacity,
)

logger = logging.getLogger("nandcode")

CAPACITY_BITS_PER_CELL = (2, 3, 4)
# Codebook giving the m-ary code rate of each row of the capacity table
CAPACITY_CODEBOOKS = {2: "mlc2-q-cb1", 3: "mlc3-8ary-14_15"}
VERIFY_SYMBOLS = 100_000
DEFAULT_ROWS = 128
DEFAULT_COLS = 1536
DEFAULT_PATTERN_SCHEME = "slc-rll"
DEFAULT_GAMMA_X = 0.2


def write_csv(header: Sequence[str], rows: Sequence[Sequence[Any]], out: Optional[str]) -> None:
    """Write a table to ``out`` or standard output."""
    if out is None:
        writer = csv.writer(sys.stdout, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
        return
    with open(out, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    logger.info(f"Wrote {len(rows)} rows to {out}")


def cmd_capacity() -> List[List[Any]]:
    """Code rates and capacities of both MLC modulation families per bits/cell."""
    c_rll = rll_d1_capacity()
    rows: List[List[Any]] = []
    for m in CAPACITY_BITS_PER_CELL:
        codebook = CAPACITY_CODEBOOKS.get(m)
        rows.append(
            [
                m,
                round(((m - 1) + RLL_RATE) / m, 4),
                round(((m - 1) + c_rll) / m, 4),
                round(CODEBOOK_PRESETS[codebook].rate, 4) if codebook else "",
                round(eph_free_capacity(m), 4),
            ]
        )
    return rows


CAPACITY_HEADER = ["m_bits", "binary_rll_rate", "binary_rll_capacity", "mary_rate", "mary_capacity"]


def cmd_codebook(preset: str, out: Optional[str] = None, seed: int = 0) -> Dict[str, Any]:
    """Build a codebook, write it to disk and verify its E-PH behaviour.

    Returns:
        The verification report.
    """
    cb = preset_codebook(preset)
    path = Path(out) if out else Path(f"{preset}.cb")
    write_codebook(cb, path)
    logger.info(f"Wrote codebook {preset} ({cb.header()}) to {path}")

    counts = subset_counts(cb.m_bits, cb.word_len)
    stats = junction_statistics(cb, math.ceil(VERIFY_SYMBOLS / cb.word_len), seed=seed)
    return {
        "preset": preset,
        "file": str(path),
        "header": cb.header(),
        "rate": cb.rate,
        "pool_size": cb.pool_size,
        "required": cb.size,
        "subset_counts": [{"first": first, "last": last, "count": n} for (first, last), n in counts.items()],
        "candidates": sum(counts.values()),
        "verification": {
            "symbols": stats.words * cb.word_len,
            "internal_eph": stats.internal_eph,
            "junction_eph": stats.junction_eph,
            "junction_rate": stats.junction_rate,
            "expected_junction_rate": expected_junction_rate(cb),
            "double_sided_eph": stats.double_sided,
        },
    }


def cmd_patterns(scheme: str, rows: int, cols: int, seed: int) -> List[List[Any]]:
    """E-PH class counts of a random grid written with ``scheme``."""
    tally = pattern_table(scheme, rows, cols, seed)
    logger.info(f"{tally.e_cells} E cells, {tally.total(min_n_x=1)} with an x-directional PH neighbour")
    return [[c.n_x, c.n_y, c.n_xy, n, tally.fraction(c)] for c, n in tally.counts.items()]


PATTERNS_HEADER = ["n_x", "n_y", "n_xy", "count", "fraction_of_E_cells"]


def cmd_simulate(config: SweepConfig) -> List[SweepPoint]:
    """WER sweep over the configured runs and gamma_x* grid."""
    return run_sweep(config)


def coupling_from_flags(args: argparse.Namespace, dist: StateDistribution, channel: ChannelSettings) -> CouplingParams:
    """Coupling of the distribution command.

    ``--alpha``/``--beta`` select the scaled capacitive model, in which any
    ``--gamma-*`` flag replaces the matching base ratio. Otherwise the
    ``--gamma-*`` flags are effective ratios, with y and diagonal coupling
    taken from the channel settings when not given.
    """
    delta = aggressor_shift(dist.levels - 1, dist)
    if args.alpha is not None or args.beta is not None:
        coupling = CouplingParams.scaled(
            alpha=args.alpha if args.alpha is not None else 1.0,
            beta=args.beta if args.beta is not None else 0.0,
            delta_v_e_ph=delta,
        )
        ratios = {"gamma_x": args.gamma_x, "gamma_y": args.gamma_y, "gamma_xy": args.gamma_xy}
        return replace(coupling, **{k: v for k, v in ratios.items() if v is not None})
    return CouplingParams.effective(
        args.gamma_x if args.gamma_x is not None else DEFAULT_GAMMA_X,
        gamma_y=args.gamma_y if args.gamma_y is not None else channel.gamma_y,
        gamma_xy=args.gamma_xy if args.gamma_xy is not None else channel.gamma_xy,
        delta_v_e_ph=delta,
    )


def cmd_distribution(args: argparse.Namespace, config: SweepConfig) -> Tuple[List[str], List[List[float]]]:
    """Voltage histograms before and after interference."""
    preset = args.scheme or DEFAULT_PATTERN_SCHEME
    dist = channel_distribution(config, SCHEME_PRESETS[preset].m_bits)
    coupling = coupling_from_flags(args, dist, config.channel)
    logger.info(
        f"Distribution of {preset} at gamma_x*={coupling.gamma_x_star:g}, "
        f"gamma_y={coupling.effective_gamma_y:g}, gamma_xy={coupling.effective_gamma_xy:g}"
    )
    return distribution_table(
        preset,
        coupling,
        dist,
        rows=args.rows or DEFAULT_ROWS,
        cols=args.cols or DEFAULT_COLS,
        seed=config.seed,
    )


def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI sweep configuration (default: $NANDCODE_CONFIG_FILE)")
    common.add_argument("--seed", type=int, help="base seed")
    common.add_argument("--trials", type=int, help="trials per sweep point")
    common.add_argument("--rows", type=int, help="word lines per grid")
    common.add_argument("--cols", type=int, help="cells per word line (pass-through grids)")
    common.add_argument("--alpha", type=float, help="capacitive coupling scale")
    common.add_argument("--beta", type=float, help="direct-field x coupling")
    common.add_argument("--gamma-x", dest="gamma_x", type=float, help="x coupling ratio")
    common.add_argument("--gamma-y", dest="gamma_y", type=float, help="y coupling ratio")
    common.add_argument("--gamma-xy", dest="gamma_xy", type=float, help="diagonal coupling ratio")
    common.add_argument("--grid", help="comma-separated gamma_x* values to sweep")
    common.add_argument("--scheme", choices=sorted(SCHEME_PRESETS), help="scheme preset")
    common.add_argument("--ecc", help=f"ECC preset or '{NO_ECC}'")
    common.add_argument("--interleave", choices=["on", "off"], help="block interleaver")
    common.add_argument("--workers", type=int, help="worker processes for sweeps")
    common.add_argument("--out", help="output path (default: stdout)")
    common.add_argument(
        "--log-level",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help="logging level (default: $NANDCODE_LOG_LEVEL or INFO)",
    )
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_options()
    parser = argparse.ArgumentParser(
        prog="nandcode",
        description="Modulation codes against cell-to-cell interference in NAND flash",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("capacity", parents=[common], help="code rates and capacities per bits/cell")
    codebook = sub.add_parser("codebook", parents=[common], help="build and verify a codebook")
    codebook.add_argument("preset", choices=sorted(CODEBOOK_PRESETS))
    sub.add_parser("patterns", parents=[common], help="E-PH pattern statistics of a random grid")
    sub.add_parser("simulate", parents=[common], help="WER sweep over gamma_x*")
    sub.add_parser("distribution", parents=[common], help="voltage histograms before/after interference")
    return parser


# Flags each command reads; any other common flag is a usage error.
# simulate sweeps gamma_x* directly (--grid), so --gamma-x and --beta have no
# meaning there and --alpha only scales the y and diagonal ratios.
COMMAND_FLAGS: Dict[str, Tuple[str, ...]] = {
    "capacity": ("out",),
    "codebook": ("out", "seed"),
    "patterns": ("scheme", "rows", "cols", "seed", "out"),
    "simulate": (
        "config", "seed", "trials", "rows", "alpha", "gamma_y", "gamma_xy",
        "grid", "scheme", "ecc", "interleave", "workers", "out",
    ),
    "distribution": (
        "config", "seed", "rows", "cols", "alpha", "beta", "gamma_x", "gamma_y",
        "gamma_xy", "scheme", "out",
    ),
}
COMMON_FLAGS = (
    "config", "seed", "trials", "rows", "cols", "alpha", "beta", "gamma_x", "gamma_y",
    "gamma_xy", "grid", "scheme", "ecc", "interleave", "workers", "out",
)


def unused_flags(args: argparse.Namespace) -> List[str]:
    """Flags given on the command line that ``args.command`` does not read."""
    allowed = COMMAND_FLAGS[args.command]
    return [
        "--" + name.replace("_", "-")
        for name in COMMON_FLAGS
        if getattr(args, name) is not None and name not in allowed
    ]


def _channel_overrides(args: argparse.Namespace, config: SweepConfig) -> Optional[Dict[str, Any]]:
    gamma_y, gamma_xy = args.gamma_y, args.gamma_xy
    if args.alpha is not None:
        gamma_y = gamma_y if gamma_y is not None else args.alpha * BASE_GAMMA_Y
        gamma_xy = gamma_xy if gamma_xy is not None else args.alpha * BASE_GAMMA_XY
    if gamma_y is None and gamma_xy is None:
        return None
    channel = config.channel.model_dump()
    if gamma_y is not None:
        channel["gamma_y"] = gamma_y
    if gamma_xy is not None:
        channel["gamma_xy"] = gamma_xy
    return channel


def sweep_config_from_args(args: argparse.Namespace) -> SweepConfig:
    """Sweep configuration from the config file, env and command-line flags."""
    config = load_config(args.config)
    runs = None
    if args.scheme:
        ecc = args.ecc or NO_ECC
        interleave = parse_flag(args.interleave) if args.interleave else False
        runs = [{"label": args.scheme, "scheme": args.scheme, "ecc": ecc, "interleave": interleave}]
    grid = [float(g) for g in args.grid.split(",")] if args.grid else None
    return with_overrides(
        config,
        seed=args.seed,
        trials=args.trials,
        rows=args.rows,
        workers=args.workers,
        gamma_x_star=grid,
        runs=runs,
        channel=_channel_overrides(args, config),
    )


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Parse arguments and run one command."""
    parser = build_parser()
    args = parser.parse_args(argv)
    unused = unused_flags(args)
    if unused:
        parser.error(f"{args.command} does not use {', '.join(unused)}")
    logger.setLevel(args.log_level or os.getenv("NANDCODE_LOG_LEVEL", "INFO").upper())
    logger.info(f"Running {args.command}")

    if args.command == "capacity":
        write_csv(CAPACITY_HEADER, cmd_capacity(), args.out)
    elif args.command == "codebook":
        report = cmd_codebook(args.preset, args.out, seed=args.seed or 0)
        print(json.dumps(report, indent=2))
    elif args.command == "patterns":
        rows = cmd_patterns(
            args.scheme or DEFAULT_PATTERN_SCHEME,
            rows=args.rows or DEFAULT_ROWS,
            cols=args.cols or DEFAULT_COLS,
            seed=args.seed or 0,
        )
        write_csv(PATTERNS_HEADER, rows, args.out)
    elif args.command == "simulate":
        config = sweep_config_from_args(args)
        points = cmd_simulate(config)
        table = [point.as_row() for point in points]
        header = list(table[0]) if table else []
        out = args.out or (str(config.out) if config.out else None)
        write_csv(header, [list(row.values()) for row in table], out)
    elif args.command == "distribution":
        header, table = cmd_distribution(args, sweep_config_from_args(args))
        write_csv(header, table, args.out)

    logger.info(f"Finished {args.command}")
    return 0
