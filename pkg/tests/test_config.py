"""Tests for the configuration module."""

import os
import tempfile
from unittest import mock

import pytest

from nandcode.config import (
    DEFAULT_GAMMA_GRID,
    SweepConfig,
    load_config,
    parse_flag,
    validate_config,
    with_overrides,
)
from nandcode.exceptions import ConfigError


def _write_ini(text: str) -> str:
    with tempfile.NamedTemporaryFile(mode="w", suffix=".ini", delete=False) as f:
        f.write(text)
        return f.name


def test_default_config():
    """Test that default configuration is loaded correctly."""
    with mock.patch.dict(os.environ, {}, clear=True):
        config = load_config()
    assert config.trials == 1000
    assert config.seed == 0
    assert config.workers == 1
    assert config.gamma_x_star == DEFAULT_GAMMA_GRID
    assert config.channel.sigma == 0.25
    assert [run.label for run in config.runs] == [
        "conv-r0.9",
        "conv-r0.5",
        "conv-r0.5-il",
        "mod-r0.5",
        "mod-r0.5-il",
    ]


def test_config_from_file():
    """Test loading configuration from an INI file."""
    config_path = _write_ini(
        """
[sweep]
seed = 7
trials = 20
gamma_x_star = 0.0, 0.25, 0.5
codewords_per_page = 4

[channel]
sigma = 0.2
gamma_y = 0.08

[run.mod]
scheme = slc-rll
ecc = mod-3/4
interleave = on
"""
    )

    try:
        with mock.patch.dict(os.environ, {"NANDCODE_CONFIG_FILE": config_path}, clear=True):
            config = load_config()
        assert config.seed == 7
        assert config.trials == 20
        assert config.gamma_x_star == [0.0, 0.25, 0.5]
        assert config.codewords_per_page == 4
        assert config.channel.sigma == 0.2
        assert config.channel.gamma_y == 0.08
        assert len(config.runs) == 1
        run = config.runs[0]
        assert (run.label, run.scheme, run.ecc, run.interleave) == ("mod", "slc-rll", "mod-3/4", True)
    finally:
        os.unlink(config_path)


def test_config_path_argument_wins_over_env():
    """Test that an explicit path is used instead of the env variable."""
    config_path = _write_ini("[sweep]\ntrials = 3\n")
    try:
        with mock.patch.dict(os.environ, {"NANDCODE_CONFIG_FILE": "nonexistent.ini"}, clear=True):
            config = load_config(config_path)
        assert config.trials == 3
    finally:
        os.unlink(config_path)


def test_config_from_env():
    """Test loading configuration from environment variables."""
    with mock.patch.dict(
        os.environ,
        {"NANDCODE_SEED": "42", "NANDCODE_TRIALS": "5", "NANDCODE_WORKERS": "3"},
        clear=True,
    ):
        config = load_config()
    assert config.seed == 42
    assert config.trials == 5
    assert config.workers == 3


def test_invalid_config_file():
    """Test handling of an unparsable configuration file."""
    config_path = _write_ini("invalid ini")
    try:
        with mock.patch.dict(os.environ, {"NANDCODE_CONFIG_FILE": config_path}, clear=True):
            config = load_config()
            # Should fall back to defaults
            assert config.trials == 1000
    finally:
        os.unlink(config_path)


def test_missing_config_file():
    """Test handling of missing configuration file."""
    with mock.patch.dict(os.environ, {"NANDCODE_CONFIG_FILE": "nonexistent.ini"}, clear=True):
        config = load_config()
        assert config.trials == 1000


def test_unknown_scheme_in_file_is_a_config_error():
    """Test that a parsable file with an unknown preset fails validation."""
    config_path = _write_ini("[run.bad]\nscheme = tlc-magic\n")
    try:
        with pytest.raises(ConfigError):
            load_config(config_path)
    finally:
        os.unlink(config_path)


@pytest.mark.parametrize(
    "data",
    [
        {"trials": 0},
        {"gamma_x_star": []},
        {"gamma_x_star": [0.2, 0.1]},
        {"gamma_x_star": [0.1, 0.1]},
        {"runs": [{"label": "a", "scheme": "slc-rll", "ecc": "bch-9000"}]},
        {"runs": [{"label": "a", "scheme": "slc-rll"}, {"label": "a", "scheme": "slc-conv"}]},
        {"channel": {"sigma": 0}},
    ],
)
def test_validation_errors(data):
    """Test that invalid sweeps raise ConfigError."""
    with pytest.raises(ConfigError):
        validate_config(data)


def test_with_overrides_ignores_none():
    """Test that None overrides leave values untouched."""
    config = SweepConfig(trials=10)
    updated = with_overrides(config, trials=None, seed=5)
    assert updated.trials == 10
    assert updated.seed == 5


def test_parse_flag():
    """Test on/off parsing."""
    assert parse_flag("on") is True
    assert parse_flag("OFF") is False
    with pytest.raises(ValueError):
        parse_flag("maybe")
