import json

import pytest
import yaml

from acgsolver.config import ConfigManager, SolverConfig, Variant, get_config_manager
from acgsolver.error_handling import ConfigError


def test_defaults():
    config = SolverConfig()
    assert (config.t_acg_ms, config.t_atomic_ms) == (500, 60)
    assert config.gamma_ratio == 0.2
    assert config.global_limit_ms == 120_000
    assert config.variant_enum == Variant.ACG


@pytest.mark.parametrize("values", [
    {"gamma_ratio": 0.0},
    {"gamma_ratio": 1.5},
    {"t_acg_ms": 0},
    {"workers": 0},
    {"variant": "fastest"},
])
def test_invalid_values(values):
    with pytest.raises(ConfigError):
        SolverConfig(**values)


def test_variant_properties():
    assert SolverConfig(variant="acg", workers=8).effective_workers == 8
    assert SolverConfig(variant="acg1", workers=8).effective_workers == 1
    assert SolverConfig(variant="acgh").heuristic
    assert SolverConfig(variant="acgr").root_only


def test_json_and_yaml_files(tmp_path):
    as_json = tmp_path / "solver.json"
    as_json.write_text(json.dumps({"t_acg_ms": 250, "unknown": 1}))
    assert ConfigManager(str(as_json)).config.t_acg_ms == 250

    as_yaml = tmp_path / "solver.yaml"
    as_yaml.write_text(yaml.dump({"gamma_ratio": 0.5, "variant": "acgh"}))
    config = ConfigManager(str(as_yaml)).config
    assert config.gamma_ratio == 0.5 and config.heuristic


def test_invalid_file_values_raise(tmp_path):
    path = tmp_path / "solver.json"
    path.write_text(json.dumps({"gamma_ratio": 2}))
    with pytest.raises(ConfigError):
        ConfigManager(str(path))


def test_unreadable_file_keeps_defaults(tmp_path):
    path = tmp_path / "solver.json"
    path.write_text("{ broken")
    assert ConfigManager(str(path)).config == SolverConfig()


def test_environment_overrides(tmp_path, monkeypatch):
    monkeypatch.setenv("ACG_GAMMA", "0.4")
    monkeypatch.setenv("ACG_VARIANT", "acg1")
    config = ConfigManager(str(tmp_path / "none.json")).config
    assert config.gamma_ratio == 0.4
    assert config.variant == "acg1"


def test_environment_type_error(tmp_path, monkeypatch):
    monkeypatch.setenv("ACG_WORKERS", "many")
    with pytest.raises(ConfigError):
        ConfigManager(str(tmp_path / "none.json"))


def test_profiles(tmp_path):
    manager = get_config_manager(str(tmp_path / "none.json"), "quick")
    assert manager.config.global_limit_ms == 10_000
    manager.apply_profile("standard")
    assert manager.config.t_acg_ms == 500
    with pytest.raises(ConfigError):
        manager.apply_profile("reckless")


def test_save_and_reload(tmp_path):
    path = tmp_path / "saved.yaml"
    manager = ConfigManager(str(tmp_path / "none.json"))
    manager.update({"seed": 7, "workers": 2})
    manager.save_config(str(path))
    assert ConfigManager(str(path)).config == manager.config
