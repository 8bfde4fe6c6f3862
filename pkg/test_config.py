"""
Tests for the experiment configuration file, overrides and validation.
"""

import pytest

from ssmdrive.config import ExperimentConfig, build_config, load_config, parse_overrides
from ssmdrive.errors import ConfigError

CONFIG = """\
[model]
width = 32
layers = 3
layer_order = ltf, vcl, trm

[data]
templates = cut-in, turn-left
noise_mode = noisy
"""


def test_defaults_without_a_file():
    config = load_config()
    assert config == ExperimentConfig()
    assert config.model.layer_order == ["vcl", "ltf", "trm"]
    assert config.scan.spiral_orientation == "center_first"
    assert config.data.noise_mode == "normal"


def test_file_values(tmp_path):
    path = tmp_path / "exp.ini"
    path.write_text(CONFIG)
    config = load_config(path)
    assert config.model.width == 32
    assert config.model.layers == 3
    assert config.model.layer_order == ["ltf", "vcl", "trm"]
    assert config.data.templates == ["cut-in", "turn-left"]
    assert config.data.noise_mode == "noisy"
    # untouched sections keep their defaults
    assert config.memory.queue_length == 4


def test_overrides_win_over_the_file(tmp_path):
    path = tmp_path / "exp.ini"
    path.write_text(CONFIG)
    config = load_config(path, ["model.width=48", "memory.top_k=3", "model.use_trm=false"])
    assert config.model.width == 48
    assert config.model.layers == 3
    assert config.memory.top_k == 3
    assert config.model.use_trm is False


def test_unknown_key_names_its_line_and_the_valid_keys(tmp_path):
    path = tmp_path / "exp.ini"
    path.write_text("[model]\nwidth = 32\nwidht = 16\n")
    with pytest.raises(ConfigError) as info:
        load_config(path)
    assert info.value.line == 3
    message = str(info.value)
    assert "widht" in message
    assert "valid keys" in message and "width" in message


def test_unknown_section_is_rejected(tmp_path):
    path = tmp_path / "exp.ini"
    path.write_text("[model]\nwidth = 32\n\n[optimizer]\nlr = 1\n")
    with pytest.raises(ConfigError, match=r"unknown section \[optimizer\]") as info:
        load_config(path)
    assert info.value.line == 4


def test_invalid_values_are_config_errors():
    with pytest.raises(ConfigError, match="width"):
        build_config({"model": {"width": "0"}})
    with pytest.raises(ConfigError, match="noise_mode"):
        build_config({"data": {"noise_mode": "foggy"}})
    with pytest.raises(ConfigError, match="layer_order"):
        build_config({"model": {"layer_order": "vcl, vcl, trm"}})


def test_malformed_overrides():
    assert parse_overrides(["model.width=8", "model.layers = 2"]) == {"model": {"width": "8", "layers": "2"}}
    with pytest.raises(ConfigError):
        parse_overrides(["model.width"])
    with pytest.raises(ConfigError):
        parse_overrides(["width=8"])
    with pytest.raises(ConfigError, match="unknown key"):
        load_config(None, ["model.depth=8"])


def test_missing_file_is_a_config_error(tmp_path):
    with pytest.raises(ConfigError, match="cannot read config"):
        load_config(tmp_path / "absent.ini")


def test_rendered_config_loads_back(tmp_path, tiny_config):
    varied = tiny_config.model_copy(
        update={"model": tiny_config.model.model_copy(update={"dt_rank": 3, "layer_order": ["trm", "ltf", "vcl"]})}
    )
    path = tmp_path / "round.ini"
    path.write_text(varied.to_ini())
    assert load_config(path) == varied


def test_single_item_lists_load_back(tmp_path):
    config = load_config(None, ["bench.lengths=256", "data.templates=cut-in"])
    assert config.bench.lengths == [256]
    assert config.data.templates == ["cut-in"]
    path = tmp_path / "single.ini"
    path.write_text(config.to_ini())
    assert load_config(path) == config
