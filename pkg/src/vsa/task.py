"""Recursive task schema, canonical JSON form, and spec binding via mapping.

A task tree is the unit the engine plans, executes, repairs, and archives.
Serialization is canonical: keys sorted, compact separators, every field
present (optionals as null), so equal trees serialize to identical bytes.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterator

from .errors import (
    InvalidMappingTarget,
    MalformedDocument,
    SchemaViolation,
    UnboundReference,
)
from .paths import DottedPath, resolve_segments, write_path
from .worldstate import Effect, Predicate


class TaskStatus(str, Enum):
    UNPLANNED = "unplanned"
    PLANNED = "planned"
    EXECUTING = "executing"
    FINISHED = "finished"
    FAILED = "failed"
    ABORTED = "aborted"
    SKIPPED = "skipped"


TERMINAL_STATUSES = {
    TaskStatus.FINISHED,
    TaskStatus.FAILED,
    TaskStatus.ABORTED,
    TaskStatus.SKIPPED,
}

UNEXECUTED_STATUSES = {TaskStatus.UNPLANNED, TaskStatus.PLANNED}


class ConditionKind(str, Enum):
    HARD = "hard"
    FAIL_SKIP = "fail_skip"
    CONTEXT_GEN = "context_gen"


@dataclass
class Action:
    verb: str
    args: list[tuple[str, Any]] = field(default_factory=list)
    actor: str = ""

    def __post_init__(self):
        if not self.verb:
            raise SchemaViolation("action verb must be non-empty", path="action.verb")
        roles = [role for role, _ in self.args]
        if len(roles) != len(set(roles)):
            raise SchemaViolation("duplicate role name in action args", path="action.args")

    def arg_map(self) -> dict[str, Any]:
        return {role: value for role, value in self.args}

    def set_arg(self, role: str, value: Any) -> None:
        for i, (existing, _) in enumerate(self.args):
            if existing == role:
                self.args[i] = (role, value)
                return
        self.args.append((role, value))

    def to_json(self) -> dict:
        return {
            "verb": self.verb,
            "args": [[role, value] for role, value in self.args],
            "actor": self.actor,
        }

    @classmethod
    def from_json(cls, data: Any, where: str = "action") -> "Action":
        if not isinstance(data, dict):
            raise SchemaViolation("action must be an object", path=where)
        extra = set(data) - {"verb", "args", "actor"}
        if extra:
            key = sorted(extra)[0]
            raise SchemaViolation(f"unexpected field {key!r}", path=f"{where}.{key}")
        if "verb" not in data:
            raise SchemaViolation("action missing verb", path=f"{where}.verb")
        raw_args = data.get("args", [])
        args: list[tuple[str, Any]] = []
        if isinstance(raw_args, dict):
            args = list(raw_args.items())
        elif isinstance(raw_args, list):
            for i, pair in enumerate(raw_args):
                if not isinstance(pair, (list, tuple)) or len(pair) != 2:
                    raise SchemaViolation("arg must be a [role, value] pair", path=f"{where}.args[{i}]")
                args.append((pair[0], pair[1]))
        else:
            raise SchemaViolation("args must be a list or object", path=f"{where}.args")
        try:
            return cls(verb=data["verb"], args=args, actor=data.get("actor", ""))
        except SchemaViolation as exc:
            raise SchemaViolation(exc.message, path=f"{where}.{exc.path.split('.', 1)[-1]}")


@dataclass
class Condition:
    kind: ConditionKind
    predicate: Predicate

    def to_json(self) -> dict:
        return {"kind": self.kind.value, "predicate": self.predicate.to_json()}

    @classmethod
    def from_json(cls, data: Any, where: str = "condition") -> "Condition":
        if not isinstance(data, dict):
            raise SchemaViolation("condition must be an object", path=where)
        try:
            kind = ConditionKind(data.get("kind"))
        except ValueError:
            raise SchemaViolation(f"unknown condition kind {data.get('kind')!r}", path=f"{where}.kind")
        return cls(kind=kind, predicate=Predicate.from_json(data.get("predicate"), where=f"{where}.predicate"))


# Fields a task JSON document may carry. `spec` is accepted as a legacy
# alias of `specs` and normalized on read.
_TASK_FIELDS = {
    "id",
    "task_name",
    "parent_task",
    "sub_tasks",
    "action",
    "specs",
    "conditions",
    "effects",
    "context",
    "goals",
    "est_time",
    "actual_duration",
    "mapping",
    "status",
}

_REQUIRED_FIELDS = ("id", "task_name", "action")


@dataclass
class Task:
    id: str
    task_name: str
    action: Action
    parent_task: str | None = None
    sub_tasks: list["Task"] = field(default_factory=list)
    specs: dict[str, Any] = field(default_factory=dict)
    conditions: list[Condition] = field(default_factory=list)
    effects: list[Effect] = field(default_factory=list)
    context: dict[str, Any] = field(default_factory=dict)
    goals: list[Predicate] = field(default_factory=list)
    est_time: int = 0
    actual_duration: int | None = None
    mapping: dict[str, str] = field(default_factory=dict)
    status: TaskStatus = TaskStatus.UNPLANNED

    def walk(self) -> Iterator["Task"]:
        """Depth-first, pre-order — the execution order of the tree."""
        yield self
        for sub in self.sub_tasks:
            yield from sub.walk()

    def find(self, task_id: str) -> "Task | None":
        for node in self.walk():
            if node.id == task_id:
                return node
        return None

    def parent_of(self, task_id: str) -> "Task | None":
        for node in self.walk():
            if any(sub.id == task_id for sub in node.sub_tasks):
                return node
        return None

    def is_terminal(self) -> bool:
        return self.status in TERMINAL_STATUSES

    def is_unexecuted(self) -> bool:
        return self.status in UNEXECUTED_STATUSES

    def path_view(self) -> dict[str, Any]:
        """Dict view used by mapping sources (e.g. ``drive_task.specs.origin``).

        ``actor`` and ``estimated_time`` are exposed as top-level aliases so
        remedy mappings can say ``drive_task.actor`` and write the estimate
        under its external name.
        """
        return {
            "id": self.id,
            "task_name": self.task_name,
            "parent_task": self.parent_task,
            "status": self.status.value,
            "specs": self.specs,
            "context": self.context,
            "est_time": self.est_time,
            "estimated_time": self.est_time,
            "actual_duration": self.actual_duration,
            "action": {
                "verb": self.action.verb,
                "actor": self.action.actor,
                **self.action.arg_map(),
            },
            "actor": self.action.actor,
            "mapping": self.mapping,
        }

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "task_name": self.task_name,
            "parent_task": self.parent_task,
            "sub_tasks": [sub.to_json() for sub in self.sub_tasks],
            "action": self.action.to_json(),
            "specs": self.specs,
            "conditions": [c.to_json() for c in self.conditions],
            "effects": [e.to_json() for e in self.effects],
            "context": self.context,
            "goals": [g.to_json() for g in self.goals],
            "est_time": self.est_time,
            "actual_duration": self.actual_duration,
            "mapping": self.mapping,
            "status": self.status.value,
        }


def canonical_json(data: Any) -> str:
    return json.dumps(data, sort_keys=True, separators=(",", ":"))


def serialize_task(task: Task) -> str:
    """Canonical JSON text for a task tree; equal trees give equal bytes."""
    return canonical_json(task.to_json())


def _task_from_json(data: Any, where: str) -> Task:
    if not isinstance(data, dict):
        raise SchemaViolation("task must be an object", path=where or "$")

    def loc(name: str) -> str:
        return f"{where}.{name}" if where else name

    data = dict(data)
    if "spec" in data:
        # legacy alias, normalized on read
        if "specs" in data:
            raise SchemaViolation("both spec and specs present", path=loc("spec"))
        data["specs"] = data.pop("spec")

    extra = set(data) - _TASK_FIELDS
    if extra:
        key = sorted(extra)[0]
        raise SchemaViolation(f"unexpected field {key!r}", path=loc(key))
    for req in _REQUIRED_FIELDS:
        if req not in data:
            raise SchemaViolation(f"missing required field {req!r}", path=loc(req))

    raw_status = data.get("status", TaskStatus.UNPLANNED.value)
    try:
        status = TaskStatus(raw_status)
    except ValueError:
        raise SchemaViolation(f"unknown status {raw_status!r}", path=loc("status"))

    action = Action.from_json(data["action"], where=loc("action"))

    conditions = [
        Condition.from_json(c, where=f"{loc('conditions')}[{i}]")
        for i, c in enumerate(data.get("conditions", []))
    ]
    effects = [
        Effect.from_json(e, where=f"{loc('effects')}[{i}]")
        for i, e in enumerate(data.get("effects", []))
    ]
    goals = [
        Predicate.from_json(g, where=f"{loc('goals')}[{i}]")
        for i, g in enumerate(data.get("goals", []))
    ]
    mapping = data.get("mapping", {})
    if not isinstance(mapping, dict):
        raise SchemaViolation("mapping must be an object", path=loc("mapping"))

    task = Task(
        id=data["id"],
        task_name=data["task_name"],
        parent_task=data.get("parent_task"),
        action=action,
        specs=data.get("specs", {}),
        conditions=conditions,
        effects=effects,
        context=data.get("context", {}),
        goals=goals,
        est_time=int(data.get("est_time") or 0),
        actual_duration=data.get("actual_duration"),
        mapping={str(k): str(v) for k, v in mapping.items()},
        status=status,
    )
    subs = data.get("sub_tasks", [])
    if not isinstance(subs, list):
        raise SchemaViolation("sub_tasks must be a list", path=loc("sub_tasks"))
    for i, sub in enumerate(subs):
        child = _task_from_json(sub, where=f"{loc('sub_tasks')}[{i}]")
        child.parent_task = task.id  # repair links to match actual tree shape
        task.sub_tasks.append(child)
    return task


def deserialize_task(text: str | dict) -> Task:
    """Parse task JSON; schema errors name the offending path."""
    if isinstance(text, str):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise MalformedDocument(f"not valid JSON: {exc}")
    else:
        data = text
    return _task_from_json(data, where="")


class IdGenerator:
    """Monotonic per-run task ids with a run prefix, e.g. ``t-0007``."""

    def __init__(self, prefix: str = "t"):
        self.prefix = prefix
        self._next = 1

    def next_id(self) -> str:
        value = f"{self.prefix}-{self._next:04d}"
        self._next += 1
        return value


def clone_task(task: Task, idgen: IdGenerator, parent_id: str | None = None,
               reset: bool = False) -> Task:
    """Deep-copy a task tree with fresh ids and consistent parent links.

    With ``reset`` the copies come back unplanned with actuals cleared, the
    form needed when an archived task is reused as a planning template.
    """
    new = copy.deepcopy(task)

    def renumber(node: Task, parent: str | None) -> None:
        node.id = idgen.next_id()
        node.parent_task = parent
        if reset:
            node.status = TaskStatus.UNPLANNED
            node.actual_duration = None
        for sub in node.sub_tasks:
            renumber(sub, node.id)

    renumber(new, parent_id)
    return new


_TARGET_ALIASES = {"spec": "specs", "estimated_time": "est_time"}


def _write_target(task: Task, target: DottedPath, value: Any) -> None:
    head = _TARGET_ALIASES.get(target.head, target.head)
    rest = target.rest
    if head == "specs":
        if not rest:
            raise InvalidMappingTarget("cannot replace specs wholesale")
        write_path(task.specs, DottedPath(rest), value)
    elif head == "context":
        if not rest:
            raise InvalidMappingTarget("cannot replace context wholesale")
        write_path(task.context, DottedPath(rest), value)
    elif head == "action":
        if len(rest) != 1:
            raise InvalidMappingTarget(f"action target needs one role segment: {target}")
        if rest[0] == "actor":
            task.action.actor = value
        else:
            task.action.set_arg(rest[0], value)
    elif head == "est_time":
        if rest:
            raise InvalidMappingTarget(f"est_time takes no sub-path: {target}")
        task.est_time = int(value or 0)
    else:
        raise InvalidMappingTarget(f"unwritable mapping target {target}")


def apply_mapping(target: Task, mapping: dict[str, str],
                  bindings: dict[str, Any]) -> Task:
    """Bind spec/context/action parameters from named runtime objects.

    Each mapping entry is target-path -> source-path. The source's first
    segment names a binding (``parent``, ``this``, a remedy reference alias);
    the remainder resolves inside that object. Returns an updated copy;
    the input task is left untouched.
    """
    result = copy.deepcopy(target)
    for raw_target, raw_source in mapping.items():
        target_path = DottedPath.parse(raw_target)
        source_path = DottedPath.parse(raw_source)
        if source_path.head not in bindings:
            raise UnboundReference(
                f"mapping source {raw_source!r} names unknown binding {source_path.head!r}"
            )
        bound = bindings[source_path.head]
        if isinstance(bound, Task):
            bound = bound.path_view()
        value = resolve_segments(bound, source_path.rest)
        _write_target(result, target_path, copy.deepcopy(value))
    return result
