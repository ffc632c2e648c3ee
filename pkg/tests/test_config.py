from __future__ import annotations

import json

import pytest

from vsa.config import EngineConfig


def test_defaults():
    config = EngineConfig()
    assert config.threshold == 0.6
    assert config.retry_budget == 3
    assert config.escalation_timeout == 300


def test_config_file_overrides(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"threshold": 0.5, "port": 9000}))
    config = EngineConfig.load(path)
    assert config.threshold == 0.5
    assert config.port == 9000


def test_unknown_config_key_rejected(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"thresold": 0.5}))
    with pytest.raises(ValueError):
        EngineConfig.load(path)


def test_env_overrides_beat_file(tmp_path, monkeypatch):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"threshold": 0.5}))
    monkeypatch.setenv("VSA_THRESHOLD", "0.8")
    monkeypatch.setenv("VSA_INTERACTIVE", "true")
    config = EngineConfig.load(path)
    assert config.threshold == 0.8
    assert config.interactive is True


def test_explicit_overrides_beat_env(monkeypatch):
    monkeypatch.setenv("VSA_THRESHOLD", "0.8")
    config = EngineConfig.load(None, threshold=0.9)
    assert config.threshold == 0.9
