"""Tests for the command-line interface."""

import csv
import json
import os
from unittest import mock

import pytest

import run_sim
from nandcode.channel import StateDistribution
from nandcode.cli import (
    CAPACITY_HEADER,
    PATTERNS_HEADER,
    build_parser,
    cmd_capacity,
    cmd_codebook,
    coupling_from_flags,
    main,
    sweep_config_from_args,
)
from nandcode.config import ChannelSettings
from nandcode.exceptions import ConfigError
from nandcode.experiments import run_config


def _read_csv(path):
    with open(path, newline="", encoding="utf-8") as f:
        return list(csv.reader(f))


@pytest.fixture
def clean_env():
    """Run without configuration from the environment."""
    with mock.patch.dict(os.environ, {}, clear=True):
        yield


@pytest.fixture
def small_ini(tmp_path):
    """A sweep configuration with one-codeword pages."""
    path = tmp_path / "small.ini"
    path.write_text("[sweep]\ntrials = 1\ncodewords_per_page = 1\ngamma_x_star = 0.0, 0.5\n")
    return path


def test_capacity_rows():
    """Test the capacity table of the binary RLL and m-ary families."""
    rows = {row[0]: row for row in cmd_capacity()}
    assert sorted(rows) == [2, 3, 4]
    assert rows[2][1:3] == pytest.approx([0.8333, 0.8471], abs=1e-3)
    assert rows[3][1:3] == pytest.approx([0.8889, 0.8981], abs=1e-3)
    assert rows[3][3:] == pytest.approx([0.9333, 0.9861], abs=1e-3)
    assert rows[2][3:] == pytest.approx([0.8, 0.9163], abs=1e-3)
    assert rows[4][3] == ""
    assert rows[4][4] == pytest.approx(0.9973, abs=1e-3)
    assert cmd_capacity() == cmd_capacity()


def test_capacity_command_writes_csv(tmp_path, clean_env):
    """Test the capacity command's CSV output."""
    out = tmp_path / "capacity.csv"
    assert main(["capacity", "--out", str(out)]) == 0
    table = _read_csv(out)
    assert table[0] == CAPACITY_HEADER
    assert len(table) == 4
    assert out.read_bytes().count(b"\r") == 0


def test_codebook_report(tmp_path):
    """Test the codebook file and its verification report."""
    out = tmp_path / "cb1.cb"
    report = cmd_codebook("mlc2-q-cb1", str(out))
    assert out.read_text().splitlines()[0] == "M=2 L=5 B=8 P=exclude-level-0"
    assert report["pool_size"] == 387
    assert report["required"] == 256
    assert report["rate"] == pytest.approx(0.8)
    assert len(report["subset_counts"]) == 16
    assert report["candidates"] == 634
    assert report["candidates"] == sum(entry["count"] for entry in report["subset_counts"])
    verification = report["verification"]
    assert verification["symbols"] >= 100_000
    assert verification["internal_eph"] == 0
    assert verification["junction_eph"] == 0
    assert verification["double_sided_eph"] == 0


def test_codebook_command_default_path(tmp_path, monkeypatch, capsys, clean_env):
    """Test that the codebook command writes <preset>.cb and prints JSON."""
    monkeypatch.chdir(tmp_path)
    assert main(["codebook", "mlc2-q-cb2"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert (tmp_path / "mlc2-q-cb2.cb").exists()
    assert report["verification"]["junction_rate"] == pytest.approx(0.0464, abs=0.006)


def test_codebook_command_rejects_unknown_preset():
    """Test argparse validation of codebook presets."""
    with pytest.raises(SystemExit):
        build_parser().parse_args(["codebook", "mlc9-magic"])


def test_patterns_command(tmp_path, clean_env):
    """Test the pattern statistics of an RLL/NRZI grid."""
    out = tmp_path / "patterns.csv"
    assert main(["patterns", "--rows", "8", "--cols", "300", "--out", str(out)]) == 0
    table = _read_csv(out)
    assert table[0] == PATTERNS_HEADER
    assert table[0][-1] == "fraction_of_E_cells"
    assert all(row[0] != "2" for row in table[1:])
    assert sum(float(row[4]) for row in table[1:]) == pytest.approx(1.0)


def test_simulate_command(tmp_path, small_ini, clean_env):
    """Test a one-trial sweep of a single scheme."""
    out = tmp_path / "wer.csv"
    argv = ["simulate", "--config", str(small_ini), "--scheme", "slc-rll", "--ecc", "mod-3/4", "--out", str(out)]
    assert main(argv) == 0
    table = _read_csv(out)
    assert table[0][:6] == ["gamma_x_star", "scheme", "wer", "trials", "wilson_interval_low", "wilson_interval_high"]
    assert [row[0] for row in table[1:]] == ["0.0", "0.5"]
    assert all(row[1] == "slc-rll" for row in table[1:])
    assert table[1][2] == "0.0"


def test_simulate_grid_override(tmp_path, small_ini, clean_env):
    """Test that --grid replaces the configured gamma_x* values."""
    out = tmp_path / "wer.csv"
    argv = ["simulate", "--config", str(small_ini), "--scheme", "slc-conv", "--ecc", "conv-9/10", "--grid", "0.1", "--out", str(out)]
    assert main(argv) == 0
    assert [row[0] for row in _read_csv(out)[1:]] == ["0.1"]


def test_simulate_rejects_unknown_ecc(small_ini, clean_env):
    """Test that an unknown ECC preset is a configuration error."""
    with pytest.raises(ConfigError):
        main(["simulate", "--config", str(small_ini), "--scheme", "slc-rll", "--ecc", "bch-9000"])


def test_simulate_rejects_bad_interleave_flag():
    """Test argparse validation of on/off flags."""
    with pytest.raises(SystemExit):
        build_parser().parse_args(["simulate", "--interleave", "maybe"])


def test_distribution_command(tmp_path, clean_env):
    """Test the histogram table of the distribution command."""
    out = tmp_path / "dist.csv"
    argv = ["distribution", "--rows", "4", "--cols", "300", "--gamma-x", "0.2", "--out", str(out)]
    assert main(argv) == 0
    table = _read_csv(out)
    assert table[0][0] == "voltage_bin_center"
    assert len(table[0]) == 9
    assert sum(int(row[1]) + int(row[2]) for row in table[1:]) == 4 * 300


def test_run_cli_exit_codes():
    """Test that failures exit 1 and interrupts exit 0."""
    with mock.patch("run_sim.load_dotenv"):
        with mock.patch("run_sim.main", return_value=0):
            with pytest.raises(SystemExit) as excinfo:
                run_sim.run_cli(["capacity"])
            assert excinfo.value.code == 0

        with mock.patch("run_sim.main", side_effect=ConfigError("bad sweep")):
            with pytest.raises(SystemExit) as excinfo:
                run_sim.run_cli(["simulate"])
            assert excinfo.value.code == 1

        with mock.patch("run_sim.main", side_effect=KeyboardInterrupt):
            with pytest.raises(SystemExit) as excinfo:
                run_sim.run_cli(["simulate"])
            assert excinfo.value.code == 0


def test_simulate_routes_y_and_diagonal_coupling(small_ini, clean_env):
    """Test that --gamma-y/--gamma-xy reach the coupling of every sweep point."""
    args = build_parser().parse_args(
        ["simulate", "--config", str(small_ini), "--gamma-y", "0.3", "--gamma-xy", "0.05"]
    )
    config = sweep_config_from_args(args)
    assert config.channel.gamma_y == pytest.approx(0.3)
    assert config.channel.gamma_xy == pytest.approx(0.05)

    coupling = run_config(config.runs[0], 0.2, config).coupling
    assert coupling.effective_gamma_y == pytest.approx(0.3)
    assert coupling.effective_gamma_xy == pytest.approx(0.05)
    assert coupling.gamma_x_star == pytest.approx(0.2)


def test_simulate_alpha_scales_base_ratios(small_ini, clean_env):
    """Test that --alpha sets y and diagonal coupling unless they are given."""
    args = build_parser().parse_args(["simulate", "--config", str(small_ini), "--alpha", "2"])
    channel = sweep_config_from_args(args).channel
    assert channel.gamma_y == pytest.approx(0.16)
    assert channel.gamma_xy == pytest.approx(0.012)

    args = build_parser().parse_args(
        ["simulate", "--config", str(small_ini), "--alpha", "2", "--gamma-y", "0"]
    )
    assert sweep_config_from_args(args).channel.gamma_y == 0.0


def test_simulate_without_coupling_flags_keeps_channel(small_ini, clean_env):
    """Test that the configured channel is used when no coupling flag is given."""
    args = build_parser().parse_args(["simulate", "--config", str(small_ini)])
    assert sweep_config_from_args(args).channel == ChannelSettings()


@pytest.mark.parametrize(
    "argv",
    [
        ["simulate", "--beta", "0.1"],
        ["simulate", "--gamma-x", "0.2"],
        ["capacity", "--rows", "3"],
        ["patterns", "--ecc", "conv-9/10"],
        ["distribution", "--trials", "5"],
    ],
)
def test_flags_a_command_does_not_read_are_rejected(argv, clean_env):
    """Test that ignored flags are usage errors."""
    with pytest.raises(SystemExit) as excinfo:
        main(argv)
    assert excinfo.value.code == 2


def test_distribution_coupling_scaled_model():
    """Test the alpha/beta model of the distribution command."""
    dist = StateDistribution.evenly_spaced(1)
    channel = ChannelSettings()

    args = build_parser().parse_args(["distribution", "--alpha", "2"])
    coupling = coupling_from_flags(args, dist, channel)
    assert coupling.gamma_x_star == pytest.approx(0.2)
    assert coupling.effective_gamma_y == pytest.approx(0.16)
    assert coupling.effective_gamma_xy == pytest.approx(0.012)
    assert coupling.delta_v_e_ph == pytest.approx(2.0)

    args = build_parser().parse_args(["distribution", "--beta", "0.05", "--gamma-y", "0"])
    coupling = coupling_from_flags(args, dist, channel)
    assert coupling.gamma_x_star == pytest.approx(0.15)
    assert coupling.effective_gamma_y == 0.0


def test_distribution_coupling_effective_ratios():
    """Test effective ratios, with y and diagonal coupling from the channel settings."""
    dist = StateDistribution.evenly_spaced(1)
    args = build_parser().parse_args(["distribution", "--gamma-x", "0.3"])

    coupling = coupling_from_flags(args, dist, ChannelSettings(gamma_y=0.04))
    assert coupling.gamma_x_star == pytest.approx(0.3)
    assert coupling.effective_gamma_y == pytest.approx(0.04)
    assert coupling.effective_gamma_xy == 0.0

    default = coupling_from_flags(build_parser().parse_args(["distribution"]), dist, ChannelSettings())
    assert default.gamma_x_star == pytest.approx(0.2)
    assert default.effective_gamma_y == 0.0
