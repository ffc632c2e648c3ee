"""Situation handling: contextualize, retrieve, repair, validate, escalate.

The handler operates on the engine it is given (plan root, state, agents,
library, queue) but never imports it, keeping the dependency one-way.
"""

from __future__ import annotations

import queue as queue_mod
import threading
from dataclasses import dataclass, field
from typing import Any, Callable

from .errors import ActorFailure, VsaError
from .library import SimilarityScore
from .remedy import apply_remedy, parse_remedy, resolve_references
from .situations import Situation, SituationStatus
from .validator import TraceEntry, ValidationReport, validate_plan


@dataclass
class LogicsResult:
    context: dict[str, Any]
    unavailable: list[str] = field(default_factory=list)
    failures: dict[str, str] = field(default_factory=dict)


@dataclass
class EscalationAnswer:
    remedy: list[dict]
    on_result: Callable[[dict], None] = lambda result: None


class ScriptedEscalationBridge:
    """Answers escalations from scenario-provided remedy lists."""

    def __init__(self, answers: dict[str, list[list[dict]]] | None = None):
        self._answers = {name: list(items) for name, items in (answers or {}).items()}

    def add(self, name: str, remedy: list[dict]) -> None:
        self._answers.setdefault(name, []).append(remedy)

    def request(self, situation: Situation, payload: dict) -> EscalationAnswer | None:
        pending = self._answers.get(situation.name)
        if not pending:
            return None
        return EscalationAnswer(remedy=pending.pop(0))


class InteractiveEscalationBridge:
    """Blocks the handling loop until a remedy arrives over the gateway."""

    def __init__(self, wait_seconds: float = 120.0):
        self.wait_seconds = wait_seconds
        self._lock = threading.Lock()
        self._pending: dict[str, dict] = {}

    def pending(self) -> list[dict]:
        with self._lock:
            return [dict(entry["payload"]) for entry in self._pending.values()]

    def pending_ids(self) -> set[str]:
        with self._lock:
            return set(self._pending)

    def request(self, situation: Situation, payload: dict) -> EscalationAnswer | None:
        inbox: queue_mod.Queue = queue_mod.Queue()
        with self._lock:
            self._pending[situation.id] = {"payload": payload, "inbox": inbox}
        try:
            remedy, result_queue = inbox.get(timeout=self.wait_seconds)
        except queue_mod.Empty:
            return None
        finally:
            with self._lock:
                self._pending.pop(situation.id, None)
        return EscalationAnswer(
            remedy=remedy, on_result=lambda result: result_queue.put(result)
        )

    def submit(self, situation_id: str, remedy: list[dict],
               timeout: float = 60.0) -> dict:
        """Deliver a remedy from the gateway; blocks until validated."""
        with self._lock:
            entry = self._pending.get(situation_id)
        if entry is None:
            raise KeyError(situation_id)
        result_queue: queue_mod.Queue = queue_mod.Queue()
        entry["inbox"].put((remedy, result_queue))
        return result_queue.get(timeout=timeout)


class SituationHandler:
    """Implements the handling loop that gates every plan repair."""

    def raise_situation(self, header: Situation, ctx) -> Situation:
        """Contextualize a detected situation and push it on the queue.

        Logics come from the latest library case of the class; an unknown
        class is enqueued with empty logics and will escalate later.
        """
        header.logics = ctx.library.latest_logics(header.name) or {}
        self.run_logics(header, ctx.agents)
        header.status = SituationStatus.CONTEXTUALIZED
        if not header.id:
            header.id = ctx.next_situation_id()
        ctx.queue.push(header)
        return header

    def run_logics(self, situation: Situation, agents) -> LogicsResult:
        """Fill context keys from agent functions; existing keys carry over."""
        result = LogicsResult(context=situation.context)
        for key, reference in situation.logics.items():
            if key in situation.context:
                continue
            if not agents.has(reference):
                result.unavailable.append(key)
                continue
            try:
                situation.context[key] = agents.invoke(reference, {}, mode="real")
            except ActorFailure as exc:
                result.failures[key] = exc.message
        return result

    # ------------------------------------------------------------------

    def handle_situation(self, situation: Situation, ctx, threshold: float) -> str:
        """Retrieve-repair-validate loop; returns resolved | unresolved.

        Failed candidates are excluded and retried up to the retry budget,
        then the situation escalates. A human remedy that fails validation
        is allowed one re-escalation before the situation goes unresolved.
        """
        tried: set[str] = set()
        score: SimilarityScore | None = None
        for _ in range(ctx.config.retry_budget):
            found = ctx.library.retrieve_similar_situation(
                situation.name, situation.context, threshold, exclude_ids=tried
            )
            if found is None:
                break
            prior, score, case_id = found
            tried.add(case_id)
            ctx.note_retrieval(situation, case_id, score)
            if self._try_remedy(situation, ctx, prior.remedy):
                return "resolved"

        for _ in range(2):  # initial escalation plus one re-escalation
            situation.status = SituationStatus.ESCALATED
            ctx.note_escalation(situation)
            answer = None
            if ctx.bridge is not None:
                answer = ctx.bridge.request(situation, ctx.escalation_payload(situation))
            if answer is None:
                ctx.advance_clock(ctx.config.escalation_timeout)
                situation.status = SituationStatus.UNRESOLVED
                return "unresolved"
            if self._try_remedy(situation, ctx, answer.remedy, answer.on_result):
                return "resolved"
        situation.status = SituationStatus.UNRESOLVED
        return "unresolved"

    def _try_remedy(self, situation: Situation, ctx, remedy_json: list[dict],
                    on_result: Callable[[dict], None] | None = None) -> bool:
        """Adapt a remedy to the current runtime, validate, commit on pass."""
        working = None
        try:
            actions = parse_remedy(remedy_json)
            references: dict[str, str] = {}
            for action in actions:
                references.update(action.references)
            bindings = resolve_references(references, ctx.root, situation)
            working = apply_remedy(
                ctx.root, actions, bindings, situation.task, ctx.idgen
            )
            report = validate_plan(working, ctx.state, situation.goals, ctx.agents)
        except VsaError as exc:
            report = ValidationReport(
                "fail", [TraceEntry("", "simulate", "fail", exc.to_json())], None
            )
            working = None
        ctx.record_validation(situation, report)
        if working is not None and report.passed:
            situation.remedy = remedy_json
            situation.status = SituationStatus.RESOLVED
            ctx.commit_plan(working, situation)
            ctx.library.store_situation_case(situation)
            if on_result:
                on_result({"verdict": "pass", "committed": True,
                           "report": report.to_json()})
            return True
        if on_result:
            on_result({"verdict": "fail", "committed": False,
                       "report": report.to_json()})
        return False
