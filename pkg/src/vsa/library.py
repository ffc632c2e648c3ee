"""File-backed case libraries with context-similarity retrieval.

Layout under the library root:

    cases/situations/*.json   handled situations, one file per case
    cases/tasks/*.json        executed tasks, one file per case
    templates/*.json          seeded task templates (object or array)

Files are append-only; an in-memory index is rebuilt on startup and reads
are served from immutable snapshots of it.
"""

from __future__ import annotations

import datetime as dt
import json
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .errors import StorageFailure
from .situations import Situation, SituationStatus
from .task import Task, TaskStatus, canonical_json, deserialize_task


def _token_jaccard(a: str, b: str) -> float:
    ta = set(a.lower().split())
    tb = set(b.lower().split())
    if not ta and not tb:
        return 1.0
    return len(ta & tb) / len(ta | tb)


def _values_equal(a: Any, b: Any) -> bool:
    if isinstance(a, bool) != isinstance(b, bool):
        return False
    return a == b


@dataclass(frozen=True)
class SimilarityScore:
    value: float
    per_key: dict[str, float]

    def to_json(self) -> dict:
        return {"value": self.value, "per_key": self.per_key}


def similarity(ctx_a: dict[str, Any], ctx_b: dict[str, Any]) -> SimilarityScore:
    """Equal-weight per-key metric over the union of context keys.

    Matching values contribute 1, unequal text contributes its token
    Jaccard, anything else 0. Two empty contexts count as identical.
    """
    keys = set(ctx_a) | set(ctx_b)
    if not keys:
        return SimilarityScore(1.0, {})
    per_key: dict[str, float] = {}
    for key in sorted(keys):
        if key not in ctx_a or key not in ctx_b:
            per_key[key] = 0.0
            continue
        va, vb = ctx_a[key], ctx_b[key]
        if _values_equal(va, vb):
            per_key[key] = 1.0
        elif isinstance(va, str) and isinstance(vb, str):
            per_key[key] = _token_jaccard(va, vb)
        else:
            per_key[key] = 0.0
    return SimilarityScore(sum(per_key.values()) / len(keys), per_key)


@dataclass
class CaseRecord:
    id: str
    kind: str  # "task" | "situation"
    name: str
    context: dict[str, Any]
    payload: str  # canonical JSON text of the archived Task or Situation
    stored_at: str
    seq: int = 0

    def payload_json(self) -> dict:
        return json.loads(self.payload)

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "kind": self.kind,
            "name": self.name,
            "context": self.context,
            "payload": self.payload_json(),
            "stored_at": self.stored_at,
        }


class CaseLibrary:
    """Append-only store of executed tasks and handled situations.

    Seeded templates take part in template retrieval with the lowest
    recency, so an archived case wins ties against a template.
    """

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self._lock = threading.Lock()
        self._records: dict[str, CaseRecord] = {}
        self._templates: list[CaseRecord] = []
        self._next_seq = 1
        self._load()

    # ------------------------------------------------------------------
    # loading & persistence

    def _dir(self, kind: str) -> Path:
        return self.root / "cases" / ("situations" if kind == "situation" else "tasks")

    def _load(self) -> None:
        for sub in ("cases/situations", "cases/tasks", "templates"):
            (self.root / sub).mkdir(parents=True, exist_ok=True)

        for path in sorted((self.root / "templates").glob("*.json")):
            data = json.loads(path.read_text(encoding="utf-8"))
            items = data if isinstance(data, list) else [data]
            for item in items:
                task = deserialize_task(item)
                self._templates.append(
                    CaseRecord(
                        id=f"tpl-{len(self._templates) + 1:06d}",
                        kind="task",
                        name=task.task_name,
                        context=dict(task.context),
                        payload=canonical_json(task.to_json()),
                        stored_at="",
                        seq=0,
                    )
                )

        for kind in ("situation", "task"):
            for path in sorted(self._dir(kind).glob("*.json")):
                data = json.loads(path.read_text(encoding="utf-8"))
                record = CaseRecord(
                    id=data["id"],
                    kind=data["kind"],
                    name=data["name"],
                    context=dict(data.get("context", {})),
                    payload=canonical_json(data["payload"]),
                    stored_at=data.get("stored_at", ""),
                    seq=self._next_seq,
                )
                self._records[record.id] = record
                self._next_seq += 1

        # keep insertion counting stable across restarts
        self._next_seq = max(
            [self._next_seq] + [int(r.id.rsplit("-", 1)[1]) + 1 for r in self._records.values()]
        )

    # ------------------------------------------------------------------
    # writes

    def store_case(self, kind: str, name: str, context: dict[str, Any],
                   payload: dict | str) -> str:
        """Persist one case; returns its id. Existing records never change."""
        if kind not in ("task", "situation"):
            raise StorageFailure(f"unknown case kind {kind!r}")
        text = payload if isinstance(payload, str) else canonical_json(payload)
        with self._lock:
            seq = self._next_seq
            self._next_seq += 1
            case_id = f"{'sit' if kind == 'situation' else 'task'}-{seq:06d}"
            record = CaseRecord(
                id=case_id,
                kind=kind,
                name=name,
                context=dict(context),
                payload=text,
                stored_at=dt.datetime.now(dt.timezone.utc).isoformat(),
                seq=seq,
            )
            target = self._dir(kind) / f"{case_id}.json"
            if target.exists():
                raise StorageFailure(f"case file {target} already exists")
            try:
                target.write_text(
                    json.dumps(record.to_json(), indent=2, sort_keys=True) + "\n",
                    encoding="utf-8",
                )
            except OSError as exc:
                raise StorageFailure(f"cannot write case file: {exc}")
            self._records[case_id] = record
        return case_id

    def store_task_case(self, task: Task) -> str:
        return self.store_case("task", task.task_name, task.context, task.to_json())

    def store_situation_case(self, situation: Situation) -> str:
        return self.store_case(
            "situation", situation.name, situation.context, situation.to_json()
        )

    # ------------------------------------------------------------------
    # reads

    def fetch(self, case_id: str) -> CaseRecord | None:
        with self._lock:
            return self._records.get(case_id)

    def records(self, kind: str | None = None) -> list[CaseRecord]:
        with self._lock:
            items = list(self._records.values())
        if kind:
            items = [r for r in items if r.kind == kind]
        return sorted(items, key=lambda r: r.seq)

    def templates(self) -> list[CaseRecord]:
        return list(self._templates)

    def count(self, kind: str | None = None) -> int:
        return len(self.records(kind))

    def _best(self, candidates: list[tuple[CaseRecord, SimilarityScore]],
              threshold: float) -> tuple[CaseRecord, SimilarityScore] | None:
        eligible = [(r, s) for r, s in candidates if s.value >= threshold]
        if not eligible:
            return None
        # ties break toward the most recently stored case
        return max(eligible, key=lambda pair: (pair[1].value, pair[0].seq))

    def retrieve_similar_situation(
        self,
        name: str,
        context: dict[str, Any],
        threshold: float,
        exclude_ids: set[str] | None = None,
    ) -> tuple[Situation, SimilarityScore, str] | None:
        """Best prior situation of this class, or None below the threshold.

        Returns (situation, score, case id); the case id lets a handling
        loop exclude cases whose remedy already failed validation.
        """
        exclude = exclude_ids or set()
        candidates = [
            (record, similarity(context, record.context))
            for record in self.records("situation")
            if record.name == name and record.id not in exclude
        ]
        best = self._best(candidates, threshold)
        if best is None:
            return None
        record, score = best
        return Situation.from_json(record.payload_json()), score, record.id

    def latest_logics(self, name: str) -> dict[str, str] | None:
        """Logics block of the latest case of this situation class."""
        matches = [r for r in self.records("situation") if r.name == name]
        if not matches:
            return None
        latest = max(matches, key=lambda r: r.seq)
        return dict(latest.payload_json().get("logics", {}))

    def knows_situation_class(self, name: str) -> bool:
        return any(r.name == name for r in self.records("situation"))

    def retrieve_template(
        self, task_name: str, context: dict[str, Any], threshold: float = 0.0
    ) -> Task | None:
        """Best planning template for (task_name, context).

        Draws on seeded templates plus archived *finished* tasks; failed or
        aborted plans never seed new ones. Returns a deep copy.
        """
        candidates: list[tuple[CaseRecord, SimilarityScore]] = []
        for record in self._templates:
            if record.name == task_name:
                candidates.append((record, similarity(context, record.context)))
        for record in self.records("task"):
            if record.name != task_name:
                continue
            if record.payload_json().get("status") != TaskStatus.FINISHED.value:
                continue
            candidates.append((record, similarity(context, record.context)))
        best = self._best(candidates, threshold)
        if best is None:
            return None
        return deserialize_task(best[0].payload_json())

    def situation_case_count(self, name: str | None = None) -> int:
        records = self.records("situation")
        if name:
            records = [r for r in records if r.name == name]
        return len(records)
