"""Remedy actions: the plan-edit mini-language and its application.

An operation phrase like ``add after the drive_task`` is parsed against a
small fixed vocabulary, its target resolved through declared references,
and the edit applied to a working copy of the plan. A remedy either fully
transforms the copy or leaves the committed plan untouched.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

from .errors import (
    ParseError,
    RemedyStructureError,
    SchemaViolation,
    TargetExecuted,
    UnresolvableReference,
)
from .situations import Situation
from .task import (
    IdGenerator,
    Task,
    TaskStatus,
    apply_mapping,
    clone_task,
    deserialize_task,
)


class RemedyVerb(str, Enum):
    ADD = "add"
    DELETE = "delete"
    MODIFY = "modify"
    ABORT = "abort"


class Anchor(str, Enum):
    AFTER = "after"
    BEFORE = "before"
    AT = "at"


_VERB_ANCHORS = {
    RemedyVerb.ADD: {Anchor.AFTER, Anchor.BEFORE},
    RemedyVerb.DELETE: {Anchor.AT},
    RemedyVerb.MODIFY: {Anchor.AT},
    RemedyVerb.ABORT: {Anchor.AT},
}

_ARTICLES = {"the", "a", "an"}


@dataclass(frozen=True)
class OperationAst:
    verb: RemedyVerb
    anchor: Anchor
    target: str

    def render(self) -> str:
        return f"{self.verb.value} {self.anchor.value} {self.target}"


def parse_operation(text: str) -> OperationAst:
    """Parse an operation phrase.

    Grammar: ``verb [anchor] [article] target``. Verbs and anchors are
    case-insensitive, articles are ignored, the target is kept verbatim.
    A missing anchor defaults to ``after`` for add and ``at`` otherwise.
    """
    tokens = text.split()
    if not tokens:
        raise ParseError("empty operation", position=0)
    try:
        verb = RemedyVerb(tokens[0].lower())
    except ValueError:
        raise ParseError(f"unknown verb {tokens[0]!r}", position=0)

    pos = 1
    anchor: Anchor | None = None
    if pos < len(tokens):
        try:
            anchor = Anchor(tokens[pos].lower())
            pos += 1
        except ValueError:
            anchor = None
    if anchor is None:
        anchor = Anchor.AFTER if verb is RemedyVerb.ADD else Anchor.AT
    elif anchor not in _VERB_ANCHORS[verb]:
        raise ParseError(
            f"anchor {anchor.value!r} not allowed with verb {verb.value!r}",
            position=pos - 1,
        )

    while pos < len(tokens) and tokens[pos].lower() in _ARTICLES:
        pos += 1
    if pos >= len(tokens):
        raise ParseError("missing target", position=pos)
    target = tokens[pos]
    if pos + 1 < len(tokens):
        raise ParseError(f"unexpected token {tokens[pos + 1]!r}", position=pos + 1)
    return OperationAst(verb=verb, anchor=anchor, target=target)


@dataclass
class RemedyAction:
    operation: str
    references: dict[str, str] = field(default_factory=dict)
    mapping: dict[str, str] = field(default_factory=dict)
    with_task: Task | None = None

    def ast(self) -> OperationAst:
        return parse_operation(self.operation)

    def validate(self) -> OperationAst:
        ast = self.ast()
        if ast.verb is RemedyVerb.ADD and self.with_task is None:
            raise SchemaViolation("add requires with_task", path="with_task")
        if ast.verb in (RemedyVerb.DELETE, RemedyVerb.ABORT) and self.with_task is not None:
            raise SchemaViolation(
                f"{ast.verb.value} forbids with_task", path="with_task"
            )
        if ast.verb is RemedyVerb.MODIFY and self.with_task is None and not self.mapping:
            raise SchemaViolation("modify requires with_task or mapping", path="mapping")
        return ast

    def to_json(self) -> dict:
        return {
            "operation": self.operation,
            "references": self.references,
            "mapping": self.mapping,
            "with_task": self.with_task.to_json() if self.with_task else None,
        }

    @classmethod
    def from_json(cls, data: Any, where: str = "remedy") -> "RemedyAction":
        if not isinstance(data, dict):
            raise SchemaViolation("remedy action must be an object", path=where)
        extra = set(data) - {"operation", "references", "mapping", "with_task"}
        if extra:
            key = sorted(extra)[0]
            raise SchemaViolation(f"unexpected field {key!r}", path=f"{where}.{key}")
        if "operation" not in data:
            raise SchemaViolation("remedy action missing operation", path=f"{where}.operation")
        with_task = None
        if data.get("with_task") is not None:
            with_task = deserialize_task(data["with_task"])
        action = cls(
            operation=data["operation"],
            references=dict(data.get("references", {})),
            mapping=dict(data.get("mapping", {})),
            with_task=with_task,
        )
        action.validate()
        return action


def parse_remedy(data: Any) -> list[RemedyAction]:
    if not isinstance(data, list):
        raise SchemaViolation("remedy must be a list of actions", path="remedy")
    return [RemedyAction.from_json(item, where=f"remedy[{i}]") for i, item in enumerate(data)]


class BindingTable:
    """Alias -> runtime object, grown as remedy actions create tasks."""

    def __init__(self):
        self._bound: dict[str, Any] = {}
        self._pending_new: dict[str, int] = {}
        self._created: list[Task] = []

    def bind(self, alias: str, obj: Any) -> None:
        self._bound[alias] = obj

    def bind_new_task(self, alias: str, index: int) -> None:
        self._pending_new[alias] = index

    def register_created(self, task: Task) -> None:
        self._created.append(task)

    def aliases(self) -> set[str]:
        return set(self._bound) | set(self._pending_new)

    def resolve(self, alias: str) -> Any:
        if alias in self._bound:
            return self._bound[alias]
        if alias in self._pending_new:
            index = self._pending_new[alias]
            if index < 1 or index > len(self._created):
                raise UnresolvableReference(
                    f"new_task:{index} not created yet", alias=alias
                )
            return self._created[index - 1]
        raise UnresolvableReference(f"no binding for {alias!r}", alias=alias)

    def mapping_bindings(self) -> dict[str, Any]:
        """Flatten currently-resolvable aliases for apply_mapping."""
        out: dict[str, Any] = {}
        for alias, obj in self._bound.items():
            out[alias] = obj.to_json() if isinstance(obj, Situation) else obj
        for alias, index in self._pending_new.items():
            if 1 <= index <= len(self._created):
                out[alias] = self._created[index - 1]
        return out


def _execution_order(root: Task) -> list[Task]:
    return list(root.walk())


def _relative_task(root: Task, executing_id: str | None, name: str,
                   direction: str, alias: str) -> Task:
    order = _execution_order(root)
    pivot = len(order)
    if executing_id is not None:
        for i, node in enumerate(order):
            if node.id == executing_id:
                pivot = i
                break
    if direction == "next":
        matches = [t for t in order[pivot + 1:] if t.task_name == name and t.is_unexecuted()]
    else:
        matches = [t for t in reversed(order[:pivot]) if t.task_name == name and t.is_terminal()]
    if not matches:
        raise UnresolvableReference(
            f"no {direction} task named {name!r} relative to the executing task",
            alias=alias,
        )
    return matches[0]


def resolve_references(references: dict[str, str], root: Task,
                       situation: Situation) -> BindingTable:
    """Resolve declared reference selectors to live runtime objects.

    ``this_task`` is always implicitly bound to the executing task (the one
    named by the situation) unless the remedy shadows it.
    """
    table = BindingTable()
    executing = root.find(situation.task) if situation.task else None
    if executing is not None:
        table.bind("this_task", executing)

    for alias, selector in references.items():
        selector = selector.strip()
        if selector == "executing task":
            if executing is None:
                raise UnresolvableReference(
                    f"situation names no executing task for {alias!r}", alias=alias
                )
            table.bind(alias, executing)
        elif selector == "situation context":
            table.bind(alias, situation.context)
        elif selector == "situation":
            table.bind(alias, situation)
        elif selector.startswith("task:"):
            spec = selector[len("task:"):]
            direction = "next"
            if spec.endswith("@next"):
                spec = spec[: -len("@next")]
            elif spec.endswith("@prev"):
                spec = spec[: -len("@prev")]
                direction = "prev"
            table.bind(
                alias,
                _relative_task(root, situation.task, spec, direction, alias),
            )
        elif selector.startswith("new_task:"):
            raw = selector[len("new_task:"):]
            if not raw.isdigit() or int(raw) < 1:
                raise UnresolvableReference(
                    f"bad new_task index {raw!r}", alias=alias
                )
            table.bind_new_task(alias, int(raw))
        else:
            raise UnresolvableReference(f"unknown selector {selector!r}", alias=alias)
    return table


def instantiate_with_task(action: RemedyAction, bindings: BindingTable,
                          idgen: IdGenerator) -> Task:
    """Fresh unplanned instance of the action's with_task, specs bound."""
    if action.with_task is None:
        raise SchemaViolation("action has no with_task", path="with_task")
    instance = clone_task(action.with_task, idgen, parent_id=None, reset=True)
    if action.mapping:
        instance = apply_mapping(instance, action.mapping, bindings.mapping_bindings())
    instance.status = TaskStatus.UNPLANNED
    return instance


def _locate(root: Task, task: Task, alias: str) -> Task:
    found = root.find(task.id)
    if found is None:
        raise UnresolvableReference(
            f"target {task.id} no longer present in the plan", alias=alias
        )
    return found


def _assert_insertable(parent: Task, index: int) -> None:
    # edits may only touch the unexecuted region: nothing executed or
    # executing may sit at or past the insertion point
    for sibling in parent.sub_tasks[index:]:
        if not sibling.is_unexecuted():
            raise TargetExecuted(
                f"insertion would land before executed task {sibling.id}"
            )


def _insert(root: Task, target: Task, instance: Task, anchor: Anchor) -> None:
    parent = root.parent_of(target.id)
    if parent is None:
        raise RemedyStructureError("cannot add a sibling of the plan root")
    index = next(i for i, s in enumerate(parent.sub_tasks) if s.id == target.id)
    index = index if anchor is Anchor.BEFORE else index + 1
    _assert_insertable(parent, index)
    instance.parent_task = parent.id
    parent.sub_tasks.insert(index, instance)


def _abort(target: Task) -> None:
    if target.status is not TaskStatus.EXECUTING:
        raise TargetExecuted(
            f"abort targets the executing task, {target.id} is {target.status.value}"
        )
    target.sub_tasks = [sub for sub in target.sub_tasks if not sub.is_unexecuted()]
    target.status = TaskStatus.ABORTED
    if target.actual_duration is None:
        spent = sum(sub.actual_duration or 0 for sub in target.sub_tasks)
        target.actual_duration = spent


def apply_remedy(plan_root: Task, remedy: list[RemedyAction],
                 bindings: BindingTable, executing_task_id: str | None,
                 idgen: IdGenerator) -> Task:
    """Apply all remedy actions, in order, to a working copy of the plan.

    Raises on the first illegal edit, leaving the committed plan untouched;
    callers commit the returned copy only after validation passes.
    """
    working = copy.deepcopy(plan_root)

    def resolve_task(alias: str) -> Task:
        obj = bindings.resolve(alias)
        if not isinstance(obj, Task):
            raise UnresolvableReference(
                f"{alias!r} does not name a task", alias=alias
            )
        return _locate(working, obj, alias)

    for action in remedy:
        ast = action.validate()
        target = resolve_task(ast.target)
        if ast.verb is RemedyVerb.ADD:
            instance = instantiate_with_task(action, bindings, idgen)
            _insert(working, target, instance, ast.anchor)
            bindings.register_created(instance)
        elif ast.verb is RemedyVerb.DELETE:
            if not target.is_unexecuted():
                raise TargetExecuted(f"cannot delete executed task {target.id}")
            parent = working.parent_of(target.id)
            if parent is None:
                raise RemedyStructureError("cannot delete the plan root")
            parent.sub_tasks = [s for s in parent.sub_tasks if s.id != target.id]
        elif ast.verb is RemedyVerb.MODIFY:
            if not target.is_unexecuted():
                raise TargetExecuted(f"cannot modify executed task {target.id}")
            if action.with_task is not None:
                instance = instantiate_with_task(action, bindings, idgen)
                parent = working.parent_of(target.id)
                if parent is None:
                    raise RemedyStructureError("cannot replace the plan root")
                index = next(
                    i for i, s in enumerate(parent.sub_tasks) if s.id == target.id
                )
                instance.parent_task = parent.id
                parent.sub_tasks[index] = instance
                bindings.register_created(instance)
            else:
                updated = apply_mapping(target, action.mapping, bindings.mapping_bindings())
                parent = working.parent_of(target.id)
                if parent is None:
                    raise RemedyStructureError("cannot remap the plan root")
                index = next(
                    i for i, s in enumerate(parent.sub_tasks) if s.id == target.id
                )
                parent.sub_tasks[index] = updated
        else:  # abort
            _abort(target)

    _check_tree(working)
    return working


def _check_tree(root: Task) -> None:
    seen: set[str] = set()
    for node in root.walk():
        if node.id in seen:
            raise RemedyStructureError(f"duplicate task id {node.id} after remedy")
        seen.add(node.id)
        for sub in node.sub_tasks:
            if sub.parent_task != node.id:
                raise RemedyStructureError(
                    f"broken parent link on {sub.id} after remedy"
                )
