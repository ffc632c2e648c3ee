from __future__ import annotations

import json
from pathlib import Path

import pytest

from vsa.agents import apply_agent_script, build_default_registry
from vsa.config import EngineConfig
from vsa.engine import Engine
from vsa.library import CaseLibrary
from vsa.task import Action, Task, TaskStatus
from vsa.worldstate import WorldState

SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios"


def make_task(name: str = "job", verb: str | None = None, actor: str = "vehicle",
              task_id: str = "t-test", **kwargs) -> Task:
    action = Action(verb=verb or name.replace("-", "_"), actor=actor)
    return Task(id=task_id, task_name=name, action=action, **kwargs)


def make_tree(spec, prefix: str = "n") -> Task:
    """Build a task tree from a nested (name, status, children) spec."""
    counter = [0]

    def build(node, parent_id):
        name, status, children = node
        counter[0] += 1
        task = make_task(name, task_id=f"{prefix}{counter[0]}",
                         status=TaskStatus(status))
        task.parent_task = parent_id
        for child in children:
            task.sub_tasks.append(build(child, task.id))
        return task

    return build(spec, None)


@pytest.fixture
def library(tmp_path) -> CaseLibrary:
    return CaseLibrary(tmp_path / "library")


@pytest.fixture
def seeded_library(tmp_path) -> CaseLibrary:
    """Library seeded with the window-leak template set."""
    root = tmp_path / "library"
    (root / "templates").mkdir(parents=True)
    source = SCENARIOS / "window_leak" / "templates.json"
    (root / "templates" / "templates.json").write_text(
        source.read_text(encoding="utf-8"), encoding="utf-8"
    )
    return CaseLibrary(root)


@pytest.fixture
def registry():
    return build_default_registry()


def make_engine(library: CaseLibrary, script: dict | None = None,
                facts: dict | None = None, **config_kwargs) -> Engine:
    reg = build_default_registry()
    if script:
        apply_agent_script(reg, script)
    config = EngineConfig(library_path=str(library.root), **config_kwargs)
    engine = Engine(library, reg, config=config,
                    state=WorldState(facts=facts or {}))
    reg.on_raise = engine.raise_from_header
    return engine


def load_json(path: Path):
    return json.loads(path.read_text(encoding="utf-8"))
