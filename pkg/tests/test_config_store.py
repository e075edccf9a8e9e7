import json

import pytest

from markov_urng.config_store import URNGConfig, parse_grid, parse_theta_grid, resolve_config_path
from markov_urng.errors import ValidationError


@pytest.fixture
def config(tmp_path):
    return URNGConfig(path_arg=str(tmp_path / "config.json"))


def test_range_grid_includes_stop():
    assert parse_grid("2:10:2") == [2.0, 4.0, 6.0, 8.0, 10.0]
    assert parse_grid("-0.5:2:0.5") == pytest.approx([-0.5, 0.0, 0.5, 1.0, 1.5, 2.0])


def test_comma_grid():
    assert parse_grid("0.5, 1,2") == [0.5, 1.0, 2.0]


@pytest.mark.parametrize("spec", ["", "1:2", "2:1:1", "0:1:0", "a,b", "0:1:1e-6"])
def test_bad_grids(spec):
    with pytest.raises(ValidationError):
        parse_grid(spec)


def test_theta_grid_must_stay_above_minus_one():
    with pytest.raises(ValidationError):
        parse_theta_grid("-1:1:0.5")
    assert parse_theta_grid("-0.9,0.5") == [-0.9, 0.5]


def test_directory_path_gets_config_file(tmp_path):
    assert resolve_config_path(str(tmp_path)) == tmp_path / "config.json"


def test_defaults(config):
    assert config.data["default_model"] is None
    assert config.data["default_format"] == "csv"
    assert config.data["default_theta_grid"] == "-0.5:2:0.5"
    assert config.data["bits"] is False
    assert not config.config_path.exists()


def test_setters_persist(config, tmp_path):
    config.set_default_format("json")
    config.set_default_theta_grid("0:1:0.25")
    config.set_bits(True)
    stored = json.loads(config.config_path.read_text())
    assert stored["default_format"] == "json"
    assert stored["default_theta_grid"] == "0:1:0.25"
    assert stored["bits"] is True
    reloaded = URNGConfig(path_arg=str(config.config_path))
    assert reloaded.data["default_format"] == "json"


def test_invalid_settings_are_rejected(config):
    with pytest.raises(ValidationError):
        config.set_default_format("xml")
    with pytest.raises(ValidationError):
        config.set_default_theta_grid("-2:0:1")
    assert config.data["default_format"] == "csv"


def test_recent_models_are_capped(config, tmp_path):
    for i in range(12):
        config.set_default_model(str(tmp_path / f"model{i}.json"))
    recent = config.data["recent_models"]
    assert len(recent) == 10
    assert recent[0].endswith("model11.json")
    assert config.data["default_model"] == recent[0]


def test_repeated_model_moves_to_front(config, tmp_path):
    first, second = str(tmp_path / "a.json"), str(tmp_path / "b.json")
    config.set_default_model(first)
    config.set_default_model(second)
    config.set_default_model(first)
    assert [p.rsplit("/", 1)[-1] for p in config.data["recent_models"]] == ["a.json", "b.json"]


def test_corrupt_file_falls_back_to_defaults(tmp_path):
    path = tmp_path / "config.json"
    path.write_text("{not json")
    assert URNGConfig(path_arg=str(path)).data["default_format"] == "csv"
