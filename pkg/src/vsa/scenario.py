"""Scenario scripts: seeded data, scripted agents, timeline, expectations.

A scenario file seeds the case library, describes the trip order, binds
canned agent responses, fires timeline triggers off execution events, and
names the checks a run must satisfy. Runs are deterministic given the
script and seed.
"""

from __future__ import annotations

import json
import shutil
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .agents import apply_agent_script, build_default_registry
from .config import EngineConfig
from .engine import Engine, EventKind, ExecutionEvent
from .errors import ScriptError
from .handling import InteractiveEscalationBridge, ScriptedEscalationBridge
from .library import CaseLibrary
from .situations import Situation
from .task import Task, TaskStatus, deserialize_task
from .worldstate import WorldState


@dataclass
class RunResult:
    scenario: str
    final_status: str | None
    expectations: list[dict]
    resolved: list[str]
    escalations: int
    new_situation_cases: int
    event_kinds: list[str]
    snapshot: dict
    engine: Engine = field(repr=False, default=None)

    @property
    def passed(self) -> bool:
        return all(e["passed"] for e in self.expectations)

    def to_json(self) -> dict:
        return {
            "scenario": self.scenario,
            "final_status": self.final_status,
            "passed": self.passed,
            "expectations": self.expectations,
            "resolved": self.resolved,
            "escalations": self.escalations,
            "new_situation_cases": self.new_situation_cases,
        }


def load_scenario(path: str | Path) -> dict:
    path = Path(path)
    script = json.loads(path.read_text(encoding="utf-8"))
    script["_base"] = str(path.parent)
    return script


def seed_library(script: dict, library_path: Path) -> CaseLibrary:
    """Copy seeded templates and situation cases into the library once.

    A marker file makes re-runs reuse the grown library instead of
    re-seeding, which is what case reuse across runs depends on.
    """
    base = Path(script.get("_base", "."))
    library_path.mkdir(parents=True, exist_ok=True)
    marker = library_path / "seeded.json"
    already = marker.exists()
    if not already:
        (library_path / "templates").mkdir(parents=True, exist_ok=True)
        for ref in script.get("seeded_templates", []):
            source = base / ref
            if not source.exists():
                raise ScriptError(f"seeded template file missing: {source}")
            shutil.copy(source, library_path / "templates" / source.name)
    library = CaseLibrary(library_path)
    if not already:
        for ref in script.get("seeded_situation_cases", []):
            source = base / ref
            if not source.exists():
                raise ScriptError(f"seeded situation case missing: {source}")
            situation = Situation.from_json(
                json.loads(source.read_text(encoding="utf-8"))
            )
            library.store_situation_case(situation)
        marker.write_text(
            json.dumps({"scenario": script.get("name", "")}) + "\n", encoding="utf-8"
        )
    return library


class _TimelineTrigger:
    def __init__(self, spec: dict, engine: Engine):
        self.on = spec.get("on", {})
        self.spec = spec
        self.engine = engine
        if "event" in self.on:
            try:
                EventKind(self.on["event"])
            except ValueError:
                raise ScriptError(f"unknown trigger event {self.on['event']!r}")
        self.occurrence = int(self.on.get("occurrence", 1))
        self.matches = 0
        self.fired = False

    def __call__(self, event: ExecutionEvent) -> None:
        if self.fired or not self._matches(event):
            return
        self.matches += 1
        if self.matches < self.occurrence:
            return
        self.fired = True
        if "raise" in self.spec:
            self.engine.raise_from_header(dict(self.spec["raise"]))
        if "set_response" in self.spec:
            entry = self.spec["set_response"]
            self.engine.agents.extend_script(
                entry["reference"], entry.get("responses", []),
                simulation=entry.get("simulation"),
            )

    def _matches(self, event: ExecutionEvent) -> bool:
        on = self.on
        if "seq" in on and event.seq != int(on["seq"]):
            return False
        if "event" in on and event.kind.value != on["event"]:
            return False
        if "task_name" in on and event.detail.get("task_name") != on["task_name"]:
            return False
        return True


def _load_remedy_file(base: Path, ref: str) -> list[dict]:
    path = base / ref
    if not path.exists():
        raise ScriptError(f"escalation remedy file missing: {path}")
    data = json.loads(path.read_text(encoding="utf-8"))
    if not isinstance(data, list):
        raise ScriptError(f"remedy file {ref} must hold a list of actions")
    return data


def build_engine(script: dict, config: EngineConfig,
                 bridge=None) -> Engine:
    """Assemble library, agents, bridge, and engine for one scenario run."""
    library = seed_library(script, Path(config.library_path))
    registry = build_default_registry()
    apply_agent_script(registry, script.get("agents", {}))

    base = Path(script.get("_base", "."))
    if bridge is None:
        if config.interactive:
            bridge = InteractiveEscalationBridge(config.escalation_wait)
        else:
            bridge = ScriptedEscalationBridge()
            for entry in script.get("timeline", []):
                if "on_escalation" in entry:
                    bridge.add(
                        entry["on_escalation"],
                        _load_remedy_file(base, entry["remedy_file"]),
                    )

    state = WorldState.from_json(script.get("initial_state", {}))
    engine = Engine(library, registry, config=config, state=state, bridge=bridge)
    registry.on_raise = engine.raise_from_header

    for entry in script.get("timeline", []):
        if "on" in entry:
            engine.subscribers.append(_TimelineTrigger(entry, engine))
    return engine


def run_scenario(script: dict | str | Path, config: EngineConfig | None = None,
                 bridge=None, evaluate: bool = True) -> RunResult:
    """Seed, execute, and check one scenario; deterministic per script+seed."""
    if not isinstance(script, dict):
        script = load_scenario(script)
    config = config or EngineConfig()
    engine = build_engine(script, config, bridge=bridge)
    baseline_cases = engine.library.situation_case_count()

    trip = deserialize_task(script["trip_order"])
    status = engine.run(trip)
    engine.close()

    new_cases = engine.library.situation_case_count() - baseline_cases
    expectations = []
    if evaluate:
        expectations = [
            check_expectation(entry, engine, new_cases)
            for entry in script.get("expectations", [])
        ]
    return RunResult(
        scenario=script.get("name", ""),
        final_status=status.value if status else None,
        expectations=expectations,
        resolved=list(engine.resolved_names),
        escalations=engine.escalation_count,
        new_situation_cases=new_cases,
        event_kinds=[e.kind.value for e in engine.events],
        snapshot=engine.snapshot(),
        engine=engine,
    )


# ----------------------------------------------------------------------
# expectation checks


def _finished_sequence(root: Task, names: list[str]) -> bool:
    wanted = list(names)
    for node in root.walk():
        if wanted and node.task_name == wanted[0] and node.status is TaskStatus.FINISHED:
            wanted.pop(0)
    return not wanted


def _after_aborted(root: Task, entry: dict) -> tuple[bool, str]:
    aborted = next(
        (s for s in root.sub_tasks if s.status is TaskStatus.ABORTED), None
    )
    if aborted is None:
        return False, "no aborted task among the root's children"
    index = next(i for i, s in enumerate(root.sub_tasks) if s.id == aborted.id)
    after = root.sub_tasks[index + 1:]
    names = entry.get("names", [])
    if [t.task_name for t in after[: len(names)]] != names:
        return False, f"sequence after abort is {[t.task_name for t in after]}"
    for spec_check in entry.get("specs", []):
        task = after[int(spec_check["offset"])]
        actual = task.specs.get(spec_check["key"])
        if actual != spec_check["value"]:
            return False, (
                f"{task.task_name}[{spec_check['offset']}].specs"
                f".{spec_check['key']} == {actual!r}"
            )
    return True, ""


def check_expectation(entry: dict, engine: Engine, new_cases: int) -> dict:
    kind = entry.get("kind")
    name = entry.get("name", kind)
    passed = False
    detail: Any = None
    root = engine.root
    if kind == "situations_resolved":
        passed = engine.resolved_names == entry["value"]
        detail = engine.resolved_names
    elif kind == "escalations":
        passed = engine.escalation_count == entry["value"]
        detail = engine.escalation_count
    elif kind == "root_status":
        actual = root.status.value if root else None
        passed = actual == entry["value"]
        detail = actual
    elif kind == "plan_contains_finished_sequence":
        passed = root is not None and _finished_sequence(root, entry["value"])
        detail = entry["value"]
    elif kind == "fact_equals":
        actual = engine.state.get(entry["path"])
        passed = actual == entry["value"]
        detail = actual
    elif kind == "new_situation_cases":
        passed = new_cases == entry["value"]
        detail = new_cases
    elif kind == "after_aborted_prefix":
        passed, detail = _after_aborted(root, entry) if root else (False, "no plan")
    elif kind == "validation_verdicts":
        verdicts = [v["verdict"] for v in engine.validation_log]
        passed = verdicts == entry["value"]
        detail = verdicts
    elif kind == "first_retrieval_case":
        first = engine.retrievals[0]["case_id"] if engine.retrievals else None
        passed = first == entry["value"]
        detail = first
    else:
        detail = f"unknown expectation kind {kind!r}"
    return {"name": name, "kind": kind, "passed": bool(passed), "detail": detail}


def replay_events(path: str | Path) -> list[dict]:
    """Parse a stored event log; replay re-emits exactly what was recorded."""
    events = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            events.append(json.loads(line))
    return events
