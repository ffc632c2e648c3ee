"""Situation record type and the FIFO queue incidents arrive on."""

from __future__ import annotations

import re
import threading
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

from .errors import SchemaViolation
from .worldstate import Predicate

_LOGIC_REF_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*\.[A-Za-z_][A-Za-z0-9_]*$")


class SituationStatus(str, Enum):
    RAISED = "raised"
    CONTEXTUALIZED = "contextualized"
    HANDLED = "handled"
    ESCALATED = "escalated"
    RESOLVED = "resolved"
    UNRESOLVED = "unresolved"


@dataclass
class Situation:
    """One incident: what happened, during which task, under what context.

    ``remedy`` holds raw remedy-action JSON objects; parsing them is the
    remedy engine's job. ``logics`` maps context keys to ``agent.function``
    references that fill those keys in.
    """

    name: str
    time: int
    task: str | None
    context: dict[str, Any] = field(default_factory=dict)
    logics: dict[str, str] = field(default_factory=dict)
    remedy: list[dict] = field(default_factory=list)
    goals: list[Predicate] = field(default_factory=list)
    status: SituationStatus = SituationStatus.RAISED
    id: str = ""

    def __post_init__(self):
        for key, ref in self.logics.items():
            if not _LOGIC_REF_RE.match(ref):
                raise SchemaViolation(
                    f"logics value {ref!r} is not agent.function", path=f"logics.{key}"
                )

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "time": self.time,
            "task": self.task,
            "context": self.context,
            "logics": self.logics,
            "remedy": self.remedy,
            "goals": [g.to_json() for g in self.goals],
            "status": self.status.value,
            "id": self.id,
        }

    @classmethod
    def from_json(cls, data: dict, where: str = "") -> "Situation":
        def loc(name: str) -> str:
            return f"{where}.{name}" if where else name

        if not isinstance(data, dict):
            raise SchemaViolation("situation must be an object", path=where or "$")
        if "name" not in data:
            raise SchemaViolation("situation missing name", path=loc("name"))
        raw_status = data.get("status", SituationStatus.RAISED.value)
        try:
            status = SituationStatus(raw_status)
        except ValueError:
            raise SchemaViolation(f"unknown status {raw_status!r}", path=loc("status"))
        goals = [
            Predicate.from_json(g, where=f"{loc('goals')}[{i}]")
            for i, g in enumerate(data.get("goals", []))
        ]
        return cls(
            name=data["name"],
            time=int(data.get("time") or 0),
            task=data.get("task"),
            context=dict(data.get("context", {})),
            logics=dict(data.get("logics", {})),
            remedy=list(data.get("remedy", [])),
            goals=goals,
            status=status,
            id=data.get("id", ""),
        )


class SituationQueue:
    """Multi-producer, single-consumer FIFO of pending situations."""

    def __init__(self):
        self._lock = threading.Lock()
        self._items: list[Situation] = []

    def push(self, situation: Situation) -> None:
        with self._lock:
            self._items.append(situation)

    def pop(self) -> Situation | None:
        with self._lock:
            if not self._items:
                return None
            return self._items.pop(0)

    def peek_all(self) -> list[Situation]:
        with self._lock:
            return list(self._items)

    def __len__(self) -> int:
        with self._lock:
            return len(self._items)
