"""Recursive plan-and-execute engine with in-run situation handling.

Planning copies the best library template just in time, execution walks the
tree depth-first, and the situation queue is drained once at each task's
entry. Repairs commit by swapping in a validated working copy, so every
frame re-resolves its task by id after any point the tree may have changed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Callable

from .agents import AgentRegistry
from .config import EngineConfig
from .errors import (
    ActorFailure,
    ActorUnknown,
    NoTemplateFound,
    TypeMismatch,
    UnknownReference,
    VsaError,
)
from .handling import SituationHandler
from .library import CaseLibrary
from .situations import Situation, SituationQueue, SituationStatus
from .task import (
    IdGenerator,
    Task,
    TaskStatus,
    apply_mapping,
    canonical_json,
    clone_task,
)
from .validator import ValidationReport, bind_effects
from .worldstate import Predicate, WorldState, apply_effect, check_goals, eval_predicate


class EventKind(str, Enum):
    STATUS_CHANGE = "status_change"
    ACTION_DISPATCHED = "action_dispatched"
    ACTION_RESULT = "action_result"
    CONDITION_SKIP = "condition_skip"
    SITUATION_POLLED = "situation_polled"
    ARCHIVED = "archived"


@dataclass
class ExecutionEvent:
    seq: int
    time: int
    task_id: str
    kind: EventKind
    detail: dict[str, Any] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "seq": self.seq,
            "time": self.time,
            "task_id": self.task_id,
            "kind": self.kind.value,
            "detail": self.detail,
        }


class Engine:
    """Owns the plan tree, world state, and the single execution thread.

    This object is the plan context handed to situation handling: it
    exposes ``root``, ``state``, ``library``, ``agents``, ``queue`` plus
    the commit/record hooks the handler drives repairs through.
    """

    def __init__(self, library: CaseLibrary, agents: AgentRegistry,
                 config: EngineConfig | None = None,
                 state: WorldState | None = None,
                 bridge=None):
        self.config = config or EngineConfig()
        self.library = library
        self.agents = agents
        self.state = state or WorldState()
        self.queue = SituationQueue()
        self.bridge = bridge
        self.handler = SituationHandler()
        self.idgen = IdGenerator(self.config.id_prefix)
        self.root: Task | None = None

        self.events: list[ExecutionEvent] = []
        self.subscribers: list[Callable[[ExecutionEvent], None]] = []
        self.snapshot_sink: Callable[[dict], None] | None = None
        self.situations: list[Situation] = []
        self.resolved_names: list[str] = []
        self.retrievals: list[dict] = []
        self.escalation_count = 0
        self.last_validation: ValidationReport | None = None
        self.validation_log: list[dict] = []
        self._seq = 0
        self._sit_seq = 0
        self._archived: set[str] = set()
        self._event_log = None
        if self.config.event_log_path:
            path = Path(self.config.event_log_path)
            path.parent.mkdir(parents=True, exist_ok=True)
            self._event_log = path.open("w", encoding="utf-8")

    # ------------------------------------------------------------------
    # plumbing

    def close(self) -> None:
        if self._event_log:
            self._event_log.close()
            self._event_log = None

    def emit(self, kind: EventKind, task_id: str, detail: dict | None = None) -> ExecutionEvent:
        self._seq += 1
        event = ExecutionEvent(
            seq=self._seq, time=self.state.clock, task_id=task_id,
            kind=kind, detail=detail or {},
        )
        self.events.append(event)
        if self._event_log:
            self._event_log.write(canonical_json(event.to_json()) + "\n")
            self._event_log.flush()
        for subscriber in list(self.subscribers):
            subscriber(event)
        self.publish_snapshot()
        return event

    def publish_snapshot(self) -> None:
        if self.snapshot_sink:
            self.snapshot_sink(self.snapshot())

    def snapshot(self) -> dict:
        escalated_ids = self.bridge.pending_ids() if hasattr(self.bridge, "pending_ids") else set()
        snapshot = {
            "seq": self._seq,
            "plan": self.root.to_json() if self.root else None,
            "state": self.state.to_json(),
            "situations": [s.to_json() for s in self.situations],
            "pending_situations": [s.to_json() for s in self.queue.peek_all()],
            "escalated_ids": sorted(escalated_ids),
            "last_validation": self.last_validation.to_json() if self.last_validation else None,
        }
        # snapshots outlive this call on the gateway side; sever every link
        # to live objects the engine thread keeps mutating
        return json.loads(canonical_json(snapshot))

    def find(self, task_id: str) -> Task | None:
        return self.root.find(task_id) if self.root else None

    def set_status(self, task: Task, status: TaskStatus) -> None:
        previous = task.status
        task.status = status
        self.emit(EventKind.STATUS_CHANGE, task.id,
                  {"from": previous.value, "to": status.value,
                   "task_name": task.task_name})

    def next_situation_id(self) -> str:
        self._sit_seq += 1
        return f"s-{self._sit_seq:03d}"

    def advance_clock(self, seconds: int) -> None:
        self.state = self.state.advance(seconds)

    # hooks used by the situation handler ------------------------------

    def note_retrieval(self, situation: Situation, case_id: str,
                       score) -> None:
        self.retrievals.append(
            {"situation": situation.name, "case_id": case_id, "score": score.value}
        )

    def note_escalation(self, situation: Situation) -> None:
        self.escalation_count += 1
        self.publish_snapshot()

    def record_validation(self, situation: Situation, report: ValidationReport) -> None:
        self.last_validation = report
        self.validation_log.append(
            {"situation": situation.name, "verdict": report.verdict}
        )

    def escalation_payload(self, situation: Situation) -> dict:
        executing = self.find(situation.task) if situation.task else None
        return {
            "situation": situation.to_json(),
            "task_specs": executing.specs if executing else {},
            "plan": self.root.to_json() if self.root else None,
            "state": self.state.to_json(),
            "last_validation": self.last_validation.to_json() if self.last_validation else None,
        }

    def commit_plan(self, working: Task, situation: Situation) -> None:
        old = self.root
        self.root = working
        repaired = working.context.setdefault("repaired_by", [])
        repaired.append(situation.name)
        if old is not None:
            for node in working.walk():
                before = old.find(node.id)
                if before is not None and before.status != node.status:
                    self.emit(EventKind.STATUS_CHANGE, node.id,
                              {"from": before.status.value, "to": node.status.value,
                               "task_name": node.task_name, "via": "remedy"})
        self.publish_snapshot()

    # ------------------------------------------------------------------
    # situations

    def raise_from_header(self, header: dict) -> Situation:
        """Build a situation from a header dict and push it on the queue."""
        goals = [Predicate.from_json(g) for g in header.get("goals", [])]
        situation = Situation(
            name=header["name"],
            time=self.state.clock,
            task=self._resolve_task_ref(header.get("task")),
            context=dict(header.get("context", {})),
            goals=goals,
        )
        self.situations.append(situation)
        return self.handler.raise_situation(situation, self)

    def _resolve_task_ref(self, ref: str | None) -> str | None:
        if self.root is None:
            return None
        if ref and self.find(ref) is not None:
            return ref
        executing = [t for t in self.root.walk() if t.status is TaskStatus.EXECUTING]
        if ref is None or ref == "@executing":
            return executing[-1].id if executing else None
        named = [t for t in executing if t.task_name == ref]
        if named:
            return named[-1].id
        fallback = [t for t in self.root.walk() if t.task_name == ref]
        return fallback[-1].id if fallback else None

    def drain_situations(self, reason: str) -> list[tuple[Situation, str]]:
        """Handle everything queued, in raise order; emits one poll event."""
        pending = len(self.queue)
        outcomes: list[tuple[Situation, str]] = []
        while (situation := self.queue.pop()) is not None:
            outcome = self.handler.handle_situation(
                situation, self, self.config.threshold
            )
            outcomes.append((situation, outcome))
            if outcome == "resolved":
                self.resolved_names.append(situation.name)
            elif outcome == "unresolved":
                self._fail_situation_task(situation)
        self.emit(
            EventKind.SITUATION_POLLED,
            self.root.id if self.root else "",
            {"at": reason, "pending": pending,
             "handled": [{"name": s.name, "outcome": o, "id": s.id}
                         for s, o in outcomes]},
        )
        return outcomes

    def _fail_situation_task(self, situation: Situation) -> None:
        task = self.find(situation.task) if situation.task else None
        if task is not None and not task.is_terminal():
            self.set_status(task, TaskStatus.FAILED)
            self.propagate_failure(task.id)

    # ------------------------------------------------------------------
    # planning

    def plan_task(self, task: Task, _depth: int = 0) -> Task:
        """Instantiate sub-tasks from the best matching template or case.

        Copies arrive with fresh ids, bind their specs through their
        mapping against this task, and are planned recursively, so a
        planned task carries its fully developed subtree.
        """
        if _depth > 16:
            raise NoTemplateFound(f"template nesting too deep under {task.task_name}")
        if task.status is not TaskStatus.UNPLANNED:
            return task

        if not task.sub_tasks:
            template = self.library.retrieve_template(task.task_name, task.context)
            if template is None:
                raise NoTemplateFound(f"no template for {task.task_name!r}")
            # the copy is the template; only specs and context come from the
            # new task, so empty behavioral fields inherit the template's
            if not task.goals:
                task.goals = list(template.goals)
            if not task.conditions:
                task.conditions = list(template.conditions)
            if not task.effects:
                task.effects = list(template.effects)
            if not task.est_time:
                task.est_time = template.est_time
            for child in template.sub_tasks:
                copy_child = clone_task(child, self.idgen, parent_id=task.id, reset=True)
                task.sub_tasks.append(copy_child)

        rebound: list[Task] = []
        for child in task.sub_tasks:
            if child.mapping:
                child = apply_mapping(child, child.mapping,
                                      {"parent": task, "this": child})
            child.parent_task = task.id
            rebound.append(child)
        task.sub_tasks = rebound
        self.set_status(task, TaskStatus.PLANNED)
        for child in task.sub_tasks:
            if child.status is TaskStatus.UNPLANNED:
                self.plan_task(child, _depth + 1)
        return task

    # ------------------------------------------------------------------
    # execution

    def run(self, trip: Task) -> TaskStatus | None:
        """Execute a top-level task as the plan root; returns final status."""
        self.root = trip
        self.publish_snapshot()
        status = self.execute_task(trip.id)
        self.publish_snapshot()
        return status

    def execute_task(self, task_id: str, skip_poll: bool = False) -> TaskStatus | None:
        """Execute one task; None means it vanished or was superseded.

        A superseded task polled the queue and a committed repair re-ordered
        its siblings: the parent rescans and the replacement runs without
        polling again, keeping one poll per execution gap.
        """
        task = self.find(task_id)
        if task is None:
            return None
        if task.is_terminal():
            return task.status

        if not skip_poll:
            self.drain_situations("task_entry")
            task = self.find(task_id)
            if task is None:
                return None
            if task.is_terminal():
                self.archive_task(task)
                return task.status
            parent = self.root.parent_of(task_id) if self.root else None
            if parent is not None:
                up_next = next(
                    (s for s in parent.sub_tasks if not s.is_terminal()), None
                )
                if up_next is None or up_next.id != task_id:
                    return None

        # conditions gate execution before any planning happens
        for condition in task.conditions:
            try:
                ok = eval_predicate(self.state, condition.predicate)
            except TypeMismatch:
                ok = False
            if ok:
                continue
            if condition.kind.value == "hard":
                self.set_status(task, TaskStatus.FAILED)
                self.propagate_failure(task.id)
                self.archive_task(task)
                return TaskStatus.FAILED
            if condition.kind.value == "fail_skip":
                self.set_status(task, TaskStatus.SKIPPED)
                self.emit(EventKind.CONDITION_SKIP, task.id,
                          {"predicate": condition.predicate.to_json()})
                self.archive_task(task)
                return TaskStatus.SKIPPED
            key = f"condition:{condition.predicate.path}"
            task.context[key] = canonical_json(condition.predicate.to_json())

        if task.status is TaskStatus.UNPLANNED:
            try:
                self.plan_task(task)
            except NoTemplateFound as exc:
                return self._planning_failure(task, exc)

        self.set_status(task, TaskStatus.EXECUTING)

        if task.sub_tasks:
            status = self._execute_children(task_id)
            if status is not None:
                return status
            task = self.find(task_id)
            if task is None:
                return None
        else:
            outcome = self._execute_leaf(task)
            if outcome is not None:
                return outcome
            task = self.find(task_id)
            if task is None:
                return None

        try:
            for effect in bind_effects(task):
                self.state = apply_effect(self.state, effect)
        except VsaError as exc:
            return self._hard_failure(task, f"effect application failed: {exc}")

        report = check_goals(self.state, task.goals)
        if not report.passed:
            if not task.sub_tasks:
                return self._leaf_failure(task, "goal check failed")
            return self._hard_failure(task, "goal check failed")

        self.set_status(task, TaskStatus.FINISHED)
        self.archive_task(task)
        return TaskStatus.FINISHED

    def _execute_children(self, task_id: str) -> TaskStatus | None:
        """Run children until none are runnable; returns early on failure.

        Children are rescanned every iteration because a committed repair
        may have inserted, replaced, or removed siblings meanwhile.
        """
        skip_next_poll = False
        while True:
            task = self.find(task_id)
            if task is None:
                return None
            if task.is_terminal():
                self.archive_task(task)
                return task.status
            child = next((s for s in task.sub_tasks if not s.is_terminal()), None)
            if child is None:
                return None  # all children settled; caller finishes the task
            child_status = self.execute_task(child.id, skip_poll=skip_next_poll)
            skip_next_poll = child_status is None
            task = self.find(task_id)
            if task is None:
                return None
            if task.status is TaskStatus.FAILED:
                # a child failure propagated up through this task
                self.archive_task(task)
                return TaskStatus.FAILED
            if task.is_terminal():
                self.archive_task(task)
                return task.status

    def _execute_leaf(self, task: Task) -> TaskStatus | None:
        try:
            ok, failure = self.dispatch_action(task)
        except (ActorUnknown, UnknownReference) as exc:
            return self._contain_failure(task, "agent_unreachable", str(exc))
        if not ok:
            return self._leaf_failure(task, failure or "action failed")
        return None

    def _leaf_failure(self, task: Task, message: str) -> TaskStatus | None:
        situation_class = task.specs.get("on_fail_situation")
        if isinstance(situation_class, str) and situation_class:
            return self._contain_failure(task, situation_class, message)
        self.set_status(task, TaskStatus.FAILED)
        self.propagate_failure(task.id)
        self.archive_task(task)
        return TaskStatus.FAILED

    def _contain_failure(self, task: Task, situation_class: str,
                         message: str) -> TaskStatus | None:
        """Raise the declared failure situation and give handling one shot.

        A resolved situation contains the failure: the task still ends
        failed, but the failure does not propagate and the repaired plan
        carries on around it.
        """
        context = dict(task.context)
        context.setdefault("failure", message)
        situation = self.raise_from_header(
            {"name": situation_class, "task": task.id, "context": context}
        )
        outcomes = self.drain_situations("failure")
        resolved = any(s.id == situation.id and o == "resolved" for s, o in outcomes)
        refreshed = self.find(task.id)
        if refreshed is None:
            return None
        task = refreshed
        if resolved:
            if not task.is_terminal():
                self.set_status(task, TaskStatus.FAILED)
            task.context["failure_resolved_by"] = situation.id
            self.archive_task(task)
            return task.status
        if not task.is_terminal():
            self.set_status(task, TaskStatus.FAILED)
            self.propagate_failure(task.id)
        self.archive_task(task)
        return task.status

    def _hard_failure(self, task: Task, message: str) -> TaskStatus:
        self.set_status(task, TaskStatus.FAILED)
        task.context.setdefault("failure", message)
        self.propagate_failure(task.id)
        self.archive_task(task)
        return TaskStatus.FAILED

    def _planning_failure(self, task: Task, exc: NoTemplateFound) -> TaskStatus | None:
        self.raise_from_header({
            "name": "planning_failure",
            "task": task.id,
            "context": {"task_name": task.task_name, "failure": exc.message},
        })
        self.drain_situations("failure")
        refreshed = self.find(task.id)
        if refreshed is None:
            return None
        if refreshed.is_terminal():
            self.archive_task(refreshed)
            return refreshed.status
        if refreshed.status is TaskStatus.UNPLANNED:
            return self._hard_failure(refreshed, exc.message)
        return None

    def propagate_failure(self, task_id: str) -> list[str]:
        """Mark every ancestor failed; returns their ids leaf-to-root."""
        updated: list[str] = []
        if self.root is None:
            return updated
        parent = self.root.parent_of(task_id)
        while parent is not None:
            if parent.status is not TaskStatus.FAILED:
                self.set_status(parent, TaskStatus.FAILED)
            updated.append(parent.id)
            parent = self.root.parent_of(parent.id)
        return updated

    def dispatch_action(self, task: Task) -> tuple[bool, str | None]:
        """Send a leaf's action to its actor; merges the result into context."""
        actor = task.action.actor
        reference = f"{actor}.{task.action.verb}"
        self.emit(EventKind.ACTION_DISPATCHED, task.id,
                  {"reference": reference, "task_name": task.task_name,
                   "specs": task.specs})
        if not actor or not self.agents.has(reference):
            self.emit(EventKind.ACTION_RESULT, task.id,
                      {"ok": False, "task_name": task.task_name,
                       "error": f"unknown actor function {reference}"})
            raise ActorUnknown(f"no registered actor function {reference!r}")
        try:
            value, duration = self.agents.invoke_with_meta(
                reference, task.specs, mode="real"
            )
        except ActorFailure as exc:
            if exc.detail:
                task.context.update(exc.detail)
            task.context.setdefault("failure", exc.message)
            task.actual_duration = task.est_time
            self.advance_clock(task.actual_duration)
            self.emit(EventKind.ACTION_RESULT, task.id,
                      {"ok": False, "task_name": task.task_name,
                       "error": exc.message})
            return False, exc.message
        if isinstance(value, dict):
            task.context.update(value)
        elif value is not None:
            task.context["result"] = value
        task.actual_duration = duration if duration is not None else task.est_time
        self.advance_clock(task.actual_duration)
        self.emit(EventKind.ACTION_RESULT, task.id,
                  {"ok": True, "task_name": task.task_name, "value": value})
        return True, None

    def archive_task(self, task: Task) -> str | None:
        """Snapshot a settled task into the case library, once."""
        if task.id in self._archived or not task.is_terminal():
            return None
        case_id = self.library.store_task_case(task)
        self._archived.add(task.id)
        self.emit(EventKind.ARCHIVED, task.id,
                  {"case_id": case_id, "status": task.status.value,
                   "task_name": task.task_name})
        return case_id
