"""Tests for configuration module."""

from pathlib import Path

import pytest

from avasr.config import RESOLVED_CONFIG, Config
from avasr.exceptions import ConfigurationError


def test_config_defaults():
    """Test default configuration values."""
    config = Config()

    assert config.model.d_model == 480
    assert config.model.heads == 6
    assert config.model.enc_layers == 6
    assert config.model.dec_layers == 4
    assert config.model.d_ff == 1920
    assert config.model.dropout == 0.2
    assert config.model.audio_dim == 172
    assert config.train.gamma == 0.5
    assert config.train.base_lr == 1e-3
    assert config.data.max_seconds == 15.0
    assert config.decode.beam_size == 5
    assert config.decode.length_penalty == 0.7


def test_config_explicit_params():
    """Test explicit overrides reach every section."""
    config = Config({"d_model": 64, "heads": 4, "gamma": 1.0, "beam_size": 3, "workers": 2})

    assert config.model.d_model == 64
    assert config.train.gamma == 1.0
    assert config.decode.beam_size == 3
    assert config.data.workers == 2


def test_config_none_overrides_are_ignored():
    """Test unset flags fall through to defaults."""
    config = Config({"gamma": None})
    assert config.train.gamma == 0.5


def test_config_env_vars(monkeypatch):
    """Test environment variables."""
    monkeypatch.setenv("AVASR_GAMMA", "0.25")
    monkeypatch.setenv("AVASR_FUSION_ENABLED", "false")

    config = Config()

    assert config.train.gamma == 0.25
    assert config.model.fusion_enabled is False


def test_config_priority(monkeypatch, tmp_path):
    """Test configuration priority: explicit > env > file > project > user."""
    user_dir = Path.home() / ".avasr"
    user_dir.mkdir()
    (user_dir / "config").write_text("gamma = 0.1\nseed = 1\nbeam_size = 2\npatience = 3\n")
    Path(".avasr.toml").write_text("gamma = 0.2\nseed = 2\nbeam_size = 3\n")
    run_file = tmp_path / "run.toml"
    run_file.write_text("gamma = 0.3\nseed = 3\n")
    monkeypatch.setenv("AVASR_GAMMA", "0.4")

    config = Config({"seed": 9}, config_file=run_file)

    assert config.train.seed == 9
    assert config.train.gamma == 0.4
    assert config.decode.beam_size == 3
    assert config.train.patience == 3

    assert Config(config_file=run_file).train.seed == 3


def test_config_env_table(tmp_path):
    """Test a named table wins over top-level keys."""
    path = tmp_path / "run.toml"
    path.write_text('gamma = 0.5\n\n[toy]\ngamma = 1.0\nprecision = "float64"\n')

    assert Config(config_file=path).train.gamma == 0.5
    toy = Config(config_file=path, config_env="toy")
    assert toy.train.gamma == 1.0
    assert toy.train.precision == "float64"


def test_config_unknown_key():
    """Test unknown keys are rejected."""
    with pytest.raises(ConfigurationError, match="Unknown configuration keys") as exc:
        Config({"gamme": 0.5})
    assert exc.value.error_code == "UNKNOWN_CONFIG_KEY"
    assert exc.value.details["keys"] == ["gamme"]


def test_config_validation():
    """Test invalid values become ConfigurationError naming the key."""
    with pytest.raises(ConfigurationError, match="Invalid train configuration") as exc:
        Config({"gamma": 1.5})
    assert exc.value.error_code == "INVALID_CONFIG"
    assert exc.value.details["keys"] == ["gamma"]

    with pytest.raises(ConfigurationError, match="divisible"):
        Config({"d_model": 10, "heads": 3})


def test_config_missing_file(tmp_path):
    """Test an explicit config file must exist."""
    with pytest.raises(ConfigurationError, match="does not exist"):
        Config(config_file=tmp_path / "missing.toml")


def test_config_bad_toml(tmp_path):
    """Test unreadable TOML."""
    path = tmp_path / "bad.toml"
    path.write_text("gamma = = 1\n")
    with pytest.raises(ConfigurationError, match="Failed to load config file") as exc:
        Config(config_file=path)
    assert exc.value.error_code == "CONFIG_LOAD_ERROR"


def test_write_resolved_round_trips(tmp_path):
    """Test the resolved echo reloads to the same settings."""
    config = Config({"gamma": 0.75, "d_model": 96, "heads": 4, "checkpoint_dir": "out"})

    path = config.write_resolved(tmp_path / "run")

    assert path.name == RESOLVED_CONFIG
    text = path.read_text()
    assert "gamma = 0.75" in text
    assert "# max_steps is unset" in text
    assert Config(config_file=path).resolved() == config.resolved()


def test_config_repr():
    """Test configuration string representation."""
    repr_str = repr(Config({"gamma": 1.0, "seed": 4}))
    assert "gamma=1.0" in repr_str
    assert "seed=4" in repr_str
