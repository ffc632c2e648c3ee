"""Simulation-based validation of a plan's unexecuted remainder.

Walks the tree in execution order from the current state: checks
conditions, runs leaf actions through the actors' simulation handlers,
applies effects, and checks goals, finishing with the situation's own
goals against the final simulated state. Nothing real is mutated.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

from .agents import AgentRegistry
from .errors import ActorFailure, SimulationUnsupported, TypeMismatch
from .paths import resolve_segments
from .task import Task, TaskStatus
from .worldstate import (
    Effect,
    Predicate,
    TASK_REF_PREFIX,
    WorldState,
    apply_effect,
    check_goals,
    eval_predicate,
)


@dataclass
class TraceEntry:
    task_id: str
    phase: str  # conditions | simulate | effects | goals
    outcome: str  # ok | fail | skip
    detail: Any = None

    def to_json(self) -> dict:
        return {
            "task_id": self.task_id,
            "phase": self.phase,
            "outcome": self.outcome,
            "detail": self.detail,
        }


@dataclass
class ValidationReport:
    verdict: str  # pass | fail
    trace: list[TraceEntry] = field(default_factory=list)
    failed_goal: Predicate | None = None

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def to_json(self) -> dict:
        return {
            "verdict": self.verdict,
            "trace": [t.to_json() for t in self.trace],
            "failed_goal": self.failed_goal.to_json() if self.failed_goal else None,
        }


def bind_effects(task: Task) -> list[Effect]:
    """Resolve ``@task:`` effect values against the owning task's fields."""
    bound: list[Effect] = []
    for effect in task.effects:
        value = effect.value
        if isinstance(value, str) and value.startswith(TASK_REF_PREFIX):
            ref = value[len(TASK_REF_PREFIX):]
            value = resolve_segments(task.path_view(), tuple(ref.split(".")))
        bound.append(Effect(path=effect.path, op=effect.op, value=value))
    return bound


def _eval_condition(state: WorldState, predicate: Predicate) -> bool:
    try:
        return eval_predicate(state, predicate)
    except TypeMismatch:
        return False


def simulate_task(task: Task, state: WorldState,
                  agents: AgentRegistry) -> tuple[WorldState, str]:
    """Simulate one leaf: predicted action result, then its effects.

    The clock advances by the task's time estimate; the input state is not
    modified. Returns (new state, "ok"|"fail").
    """
    reference = f"{task.action.actor}.{task.action.verb}"
    if not agents.has(reference) or not agents.supports_simulation(reference):
        raise SimulationUnsupported(f"no simulation handler for {reference}")
    try:
        agents.invoke(reference, task.specs, mode="simulation")
    except ActorFailure:
        return state.advance(task.est_time), "fail"
    new_state = state.advance(task.est_time)
    for effect in bind_effects(task):
        new_state = apply_effect(new_state, effect)
    return new_state, "ok"


class _Failure(Exception):
    def __init__(self, goal: Predicate | None = None):
        self.goal = goal


def validate_plan(plan_root: Task, state: WorldState,
                  extra_goals: list[Predicate],
                  agents: AgentRegistry) -> ValidationReport:
    """Validate the unexecuted remainder of a (possibly repaired) plan.

    Terminal tasks are skipped (their effects are already in ``state``);
    partially-executed ancestors contribute their remaining children plus
    their own effects and goals, mirroring what real execution would do.
    ``extra_goals`` (the situation's goals) are checked once at the end.
    """
    trace: list[TraceEntry] = []

    def walk(task: Task, current: WorldState) -> WorldState:
        if task.is_terminal():
            return current
        if task.status is TaskStatus.EXECUTING and not task.sub_tasks:
            # a leaf mid-dispatch is decided outside the simulation
            return current

        if task.status is not TaskStatus.EXECUTING:
            for condition in task.conditions:
                ok = _eval_condition(current, condition.predicate)
                if ok:
                    continue
                if condition.kind.value == "hard":
                    trace.append(TraceEntry(task.id, "conditions", "fail",
                                            condition.predicate.to_json()))
                    raise _Failure(condition.predicate)
                if condition.kind.value == "fail_skip":
                    trace.append(TraceEntry(task.id, "conditions", "skip",
                                            condition.predicate.to_json()))
                    return current
                # context_gen failures only annotate context during real runs

        if task.sub_tasks:
            for sub in task.sub_tasks:
                current = walk(sub, current)
        else:
            try:
                current, outcome = simulate_task(task, current, agents)
            except SimulationUnsupported as exc:
                trace.append(TraceEntry(task.id, "simulate", "fail", exc.message))
                raise _Failure(None)
            trace.append(TraceEntry(task.id, "simulate", outcome, None))
            if outcome == "fail":
                raise _Failure(None)

        if task.sub_tasks:
            for effect in bind_effects(task):
                current = apply_effect(current, effect)
            if task.effects:
                trace.append(TraceEntry(task.id, "effects", "ok", None))

        report = check_goals(current, task.goals)
        if task.goals:
            trace.append(TraceEntry(task.id, "goals",
                                    "ok" if report.passed else "fail",
                                    report.to_json()))
        if not report.passed:
            raise _Failure(report.failed_goals()[0])
        return current

    try:
        final_state = walk(plan_root, state)
        report = check_goals(final_state, extra_goals)
        if extra_goals:
            trace.append(TraceEntry(plan_root.id, "goals",
                                    "ok" if report.passed else "fail",
                                    {"scope": "situation", **report.to_json()}))
        if not report.passed:
            return ValidationReport("fail", trace, report.failed_goals()[0])
    except _Failure as failure:
        return ValidationReport("fail", trace, failure.goal)
    return ValidationReport("pass", trace, None)
