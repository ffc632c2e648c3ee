"""Virtual service agent: hierarchical task execution with case-based
situation handling, simulation-gated plan repair, and an operator gateway.
"""

from .config import EngineConfig
from .engine import Engine, EventKind, ExecutionEvent
from .library import CaseLibrary, SimilarityScore, similarity
from .remedy import OperationAst, RemedyAction, apply_remedy, parse_operation
from .situations import Situation, SituationQueue, SituationStatus
from .task import Action, Condition, Task, TaskStatus, apply_mapping, deserialize_task, serialize_task
from .validator import ValidationReport, simulate_task, validate_plan
from .worldstate import Effect, Predicate, WorldState, apply_effect, check_goals, eval_predicate

__all__ = [
    "Action",
    "CaseLibrary",
    "Condition",
    "Effect",
    "Engine",
    "EngineConfig",
    "EventKind",
    "ExecutionEvent",
    "OperationAst",
    "Predicate",
    "RemedyAction",
    "SimilarityScore",
    "Situation",
    "SituationQueue",
    "SituationStatus",
    "Task",
    "TaskStatus",
    "ValidationReport",
    "WorldState",
    "apply_effect",
    "apply_mapping",
    "apply_remedy",
    "check_goals",
    "deserialize_task",
    "eval_predicate",
    "parse_operation",
    "serialize_task",
    "similarity",
    "simulate_task",
    "validate_plan",
]
