"""Flat fact store plus the predicate/effect algebra evaluated against it.

Facts are keyed by rendered dotted paths and hold JSON scalars. Operations
never mutate a state in place; they return new snapshots, so a state value
can be shared freely across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any

from .errors import SchemaViolation, TypeMismatch
from .paths import is_valid_path

Scalar = bool | int | float | str | None

# Predicate values may reference another fact instead of a literal.
FACT_REF_PREFIX = "@path:"
# Effect values may reference a field of the task that owns the effect.
TASK_REF_PREFIX = "@task:"


class PredicateOp(str, Enum):
    EQ = "eq"
    NE = "ne"
    LT = "lt"
    LE = "le"
    GT = "gt"
    GE = "ge"
    EXISTS = "exists"
    ABSENT = "absent"


_ORDERING_OPS = {PredicateOp.LT, PredicateOp.LE, PredicateOp.GT, PredicateOp.GE}


class EffectOp(str, Enum):
    SET = "set"
    CLEAR = "clear"
    ADD = "add"


def is_number(value: Any) -> bool:
    # bool is an int subclass but is not a number for ordering purposes
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def scalars_equal(a: Any, b: Any) -> bool:
    # True == 1 in Python; keep bools distinct from numbers
    if isinstance(a, bool) != isinstance(b, bool):
        return False
    return a == b


@dataclass(frozen=True)
class Predicate:
    path: str
    op: PredicateOp
    value: Scalar = None

    def __post_init__(self):
        if not is_valid_path(self.path):
            raise SchemaViolation(f"bad predicate path {self.path!r}", path="path")
        if self.op in (PredicateOp.EXISTS, PredicateOp.ABSENT) and self.value is not None:
            raise SchemaViolation(f"{self.op.value} takes no value", path="value")

    def to_json(self) -> dict:
        return {"path": self.path, "op": self.op.value, "value": self.value}

    @classmethod
    def from_json(cls, data: dict, where: str = "predicate") -> "Predicate":
        if not isinstance(data, dict):
            raise SchemaViolation("predicate must be an object", path=where)
        try:
            op = PredicateOp(data.get("op"))
        except ValueError:
            raise SchemaViolation(f"unknown predicate op {data.get('op')!r}", path=f"{where}.op")
        extra = set(data) - {"path", "op", "value"}
        if extra:
            raise SchemaViolation(f"unexpected field {sorted(extra)[0]!r}", path=f"{where}.{sorted(extra)[0]}")
        if "path" not in data:
            raise SchemaViolation("predicate missing path", path=f"{where}.path")
        return cls(path=data["path"], op=op, value=data.get("value"))


@dataclass(frozen=True)
class Effect:
    path: str
    op: EffectOp
    value: Any = None

    def __post_init__(self):
        if not is_valid_path(self.path):
            raise SchemaViolation(f"bad effect path {self.path!r}", path="path")
        if self.op is EffectOp.SET and self.value is None:
            raise SchemaViolation("set requires a value", path="value")
        if self.op is EffectOp.CLEAR and self.value is not None:
            raise SchemaViolation("clear forbids a value", path="value")
        if self.op is EffectOp.ADD and not is_number(self.value) and not _is_task_ref(self.value):
            raise SchemaViolation("add requires a numeric value", path="value")

    def to_json(self) -> dict:
        return {"path": self.path, "op": self.op.value, "value": self.value}

    @classmethod
    def from_json(cls, data: dict, where: str = "effect") -> "Effect":
        if not isinstance(data, dict):
            raise SchemaViolation("effect must be an object", path=where)
        try:
            op = EffectOp(data.get("op"))
        except ValueError:
            raise SchemaViolation(f"unknown effect op {data.get('op')!r}", path=f"{where}.op")
        extra = set(data) - {"path", "op", "value"}
        if extra:
            raise SchemaViolation(f"unexpected field {sorted(extra)[0]!r}", path=f"{where}.{sorted(extra)[0]}")
        if "path" not in data:
            raise SchemaViolation("effect missing path", path=f"{where}.path")
        return cls(path=data["path"], op=op, value=data.get("value"))


def _is_task_ref(value: Any) -> bool:
    return isinstance(value, str) and value.startswith(TASK_REF_PREFIX)


@dataclass(frozen=True)
class WorldState:
    facts: dict[str, Scalar] = field(default_factory=dict)
    clock: int = 0

    def get(self, path: str, default: Scalar = None) -> Scalar:
        return self.facts.get(path, default)

    def has(self, path: str) -> bool:
        return path in self.facts

    def with_clock(self, clock: int) -> "WorldState":
        if clock < self.clock:
            raise ValueError("clock may not move backwards")
        return replace(self, clock=clock)

    def advance(self, seconds: int) -> "WorldState":
        return self.with_clock(self.clock + max(0, int(seconds)))

    def to_json(self) -> dict:
        return {"facts": dict(sorted(self.facts.items())), "clock": self.clock}

    @classmethod
    def from_json(cls, data: dict) -> "WorldState":
        """Accepts the wrapped {facts, clock} form or a bare path->value map."""
        if isinstance(data.get("facts"), dict):
            return cls(facts=dict(data["facts"]), clock=int(data.get("clock", 0)))
        return cls(facts=dict(data), clock=0)


@dataclass
class GoalReport:
    passed: bool
    entries: list[tuple[Predicate, bool, str | None]]

    def failed_goals(self) -> list[Predicate]:
        return [p for p, ok, _ in self.entries if not ok]

    def to_json(self) -> dict:
        return {
            "passed": self.passed,
            "entries": [
                {"predicate": p.to_json(), "passed": ok, "note": note}
                for p, ok, note in self.entries
            ],
        }


def _comparison_value(state: WorldState, p: Predicate) -> tuple[Any, bool]:
    """Return (value, available) after dereferencing a fact reference."""
    if isinstance(p.value, str) and p.value.startswith(FACT_REF_PREFIX):
        ref = p.value[len(FACT_REF_PREFIX):]
        if not state.has(ref):
            return None, False
        return state.get(ref), True
    return p.value, True


def eval_predicate(state: WorldState, p: Predicate) -> bool:
    """Evaluate one predicate against the fact store.

    A missing fact makes comparison ops false rather than erroring; only a
    type clash on an ordering op raises TypeMismatch.
    """
    if p.op is PredicateOp.EXISTS:
        return state.has(p.path)
    if p.op is PredicateOp.ABSENT:
        return not state.has(p.path)
    if not state.has(p.path):
        return False
    fact = state.get(p.path)
    value, available = _comparison_value(state, p)
    if not available:
        return False
    if p.op is PredicateOp.EQ:
        return scalars_equal(fact, value)
    if p.op is PredicateOp.NE:
        return not scalars_equal(fact, value)
    if not is_number(fact):
        raise TypeMismatch(
            f"ordering op {p.op.value} on non-numeric fact {p.path}={fact!r}"
        )
    if not is_number(value):
        raise TypeMismatch(f"ordering op {p.op.value} against non-numeric value {value!r}")
    if p.op is PredicateOp.LT:
        return fact < value
    if p.op is PredicateOp.LE:
        return fact <= value
    if p.op is PredicateOp.GT:
        return fact > value
    return fact >= value


def apply_effect(state: WorldState, e: Effect) -> WorldState:
    """Return a new state with exactly one fact updated; the clock is kept."""
    facts = dict(state.facts)
    if e.op is EffectOp.SET:
        facts[e.path] = e.value
    elif e.op is EffectOp.CLEAR:
        facts.pop(e.path, None)
    else:
        current = facts.get(e.path, 0)
        if not is_number(current) and current is not None:
            raise TypeMismatch(f"add on non-numeric fact {e.path}={current!r}")
        if not is_number(e.value):
            raise TypeMismatch(f"add with non-numeric value {e.value!r}")
        facts[e.path] = (current or 0) + e.value
    return WorldState(facts=facts, clock=state.clock)


def check_goals(state: WorldState, goals: list[Predicate]) -> GoalReport:
    """Check every goal; an empty goal list passes.

    A TypeMismatch during evaluation is recorded as that goal failing and
    flagged in the report instead of raising.
    """
    entries: list[tuple[Predicate, bool, str | None]] = []
    for goal in goals:
        try:
            ok = eval_predicate(state, goal)
            entries.append((goal, ok, None))
        except TypeMismatch as exc:
            entries.append((goal, False, f"type_mismatch: {exc.message}"))
    return GoalReport(passed=all(ok for _, ok, _ in entries), entries=entries)
