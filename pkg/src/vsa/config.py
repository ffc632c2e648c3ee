"""Deployment configuration: file-based with VSA_* environment overrides."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, fields
from pathlib import Path


@dataclass
class EngineConfig:
    library_path: str = "library"
    threshold: float = 0.6
    retry_budget: int = 3
    escalation_timeout: int = 300  # simulated seconds
    escalation_wait: float = 120.0  # wall-clock seconds in interactive mode
    host: str = "127.0.0.1"
    port: int = 8750
    event_log_path: str | None = None
    access_log_path: str | None = None
    seed: int = 0
    interactive: bool = False
    id_prefix: str = "t"

    @classmethod
    def load(cls, path: str | Path | None = None, **overrides) -> "EngineConfig":
        data: dict = {}
        if path is not None:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        config = cls()
        valid = {f.name: f.type for f in fields(cls)}
        for key, value in data.items():
            if key not in valid:
                raise ValueError(f"unknown config key {key!r}")
            setattr(config, key, value)
        config._apply_env()
        for key, value in overrides.items():
            if value is not None:
                setattr(config, key, value)
        return config

    def _apply_env(self) -> None:
        casts = {
            "threshold": float,
            "retry_budget": int,
            "escalation_timeout": int,
            "escalation_wait": float,
            "port": int,
            "seed": int,
            "interactive": lambda v: v.lower() in ("1", "true", "yes"),
        }
        for f in fields(self):
            env_key = f"VSA_{f.name.upper()}"
            if env_key in os.environ:
                raw = os.environ[env_key]
                setattr(self, f.name, casts.get(f.name, str)(raw))
