import json
import os
import tempfile
from pathlib import Path

import pytest

from motivic_may.config import CACHE_ENV_VAR, DEFAULT_DATASET_DIR, Settings, load_settings
from motivic_may.errors import ConfigError


@pytest.fixture
def config_file():
    with tempfile.TemporaryDirectory() as temp_dir:
        path = os.path.join(temp_dir, "config.json")
        yield path


def test_defaults():
    settings = Settings()
    assert settings.dataset_dir == DEFAULT_DATASET_DIR
    assert settings.workers >= 1
    assert settings.strict
    assert settings.bounds_for("motivic").f_max == 24


def test_config_file_and_overrides(config_file, monkeypatch):
    monkeypatch.delenv(CACHE_ENV_VAR, raising=False)
    with open(config_file, "w") as f:
        json.dump({"log_level": "debug", "t_max": 20, "profiles": {"a3": {"s_max": 10, "f_max": 4}}}, f)
    settings = load_settings(config_file, {"t_max": 12, "workers": None})
    assert settings.log_level == "DEBUG"
    assert settings.t_max == 12
    assert settings.bounds_for("a3").through == 34
    with pytest.raises(ConfigError):
        settings.bounds_for("motivic")


def test_environment_sets_cache_dir(monkeypatch):
    monkeypatch.setenv(CACHE_ENV_VAR, "/tmp/may-cache-from-env")
    assert load_settings().cache_dir == Path("/tmp/may-cache-from-env")
    assert load_settings(overrides={"cache_dir": "elsewhere"}).cache_dir == Path("elsewhere")


def test_invalid_values(config_file):
    with open(config_file, "w") as f:
        json.dump({"log_level": "chatty"}, f)
    with pytest.raises(ConfigError) as info:
        load_settings(config_file)
    assert info.value.errors[0]["loc"] == "log_level"


def test_malformed_json(config_file):
    with open(config_file, "w") as f:
        f.write("{")
    with pytest.raises(ConfigError):
        load_settings(config_file)
