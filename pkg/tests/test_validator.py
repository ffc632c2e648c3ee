from __future__ import annotations

import random

import pytest

from vsa.agents import build_default_registry
from vsa.errors import SimulationUnsupported
from vsa.task import Condition, ConditionKind, Task, TaskStatus, serialize_task
from vsa.validator import bind_effects, simulate_task, validate_plan
from vsa.worldstate import (
    Effect,
    EffectOp,
    Predicate,
    PredicateOp,
    WorldState,
)

from conftest import make_task


# ----------------------------------------------------------------------
# independent oracle: naive replay of condition/effect/goal semantics over
# a linear plan, written without reference to the validator


def oracle_verdict(leaves: list[Task], facts: dict, extra_goals: list[Predicate]):
    facts = dict(facts)

    def holds(predicate: Predicate) -> bool:
        if predicate.op is PredicateOp.EXISTS:
            return predicate.path in facts
        if predicate.op is PredicateOp.ABSENT:
            return predicate.path not in facts
        if predicate.path not in facts:
            return False
        fact = facts[predicate.path]
        value = predicate.value
        if isinstance(value, str) and value.startswith("@path:"):
            if value[6:] not in facts:
                return False
            value = facts[value[6:]]
        if isinstance(fact, bool) != isinstance(value, bool):
            same = False
        else:
            same = fact == value
        if predicate.op is PredicateOp.EQ:
            return same
        if predicate.op is PredicateOp.NE:
            return not same
        numeric = lambda v: isinstance(v, (int, float)) and not isinstance(v, bool)
        if not numeric(fact) or not numeric(value):
            return False
        return {
            PredicateOp.LT: fact < value, PredicateOp.LE: fact <= value,
            PredicateOp.GT: fact > value, PredicateOp.GE: fact >= value,
        }[predicate.op]

    for leaf in leaves:
        skipped = False
        for condition in leaf.conditions:
            ok = holds(condition.predicate)
            if ok:
                continue
            if condition.kind is ConditionKind.HARD:
                return "fail", facts
            if condition.kind is ConditionKind.FAIL_SKIP:
                skipped = True
                break
        if skipped:
            continue
        for effect in leaf.effects:
            if effect.op is EffectOp.SET:
                facts[effect.path] = effect.value
            elif effect.op is EffectOp.CLEAR:
                facts.pop(effect.path, None)
            else:
                facts[effect.path] = (facts.get(effect.path) or 0) + effect.value
        for goal in leaf.goals:
            if not holds(goal):
                return "fail", facts
    for goal in extra_goals:
        if not holds(goal):
            return "fail", facts
    return "pass", facts


PATHS = ["f.a", "f.b", "f.c", "g.x", "g.y"]
VALUES = [True, False, 0, 1, 5, "rain", "dry road"]


def random_predicate(rng: random.Random) -> Predicate:
    op = rng.choice([PredicateOp.EQ, PredicateOp.NE, PredicateOp.EXISTS,
                     PredicateOp.ABSENT])
    value = None if op in (PredicateOp.EXISTS, PredicateOp.ABSENT) \
        else rng.choice(VALUES)
    return Predicate(path=rng.choice(PATHS), op=op, value=value)


def random_linear_plan(rng: random.Random) -> tuple[Task, dict, list[Predicate]]:
    root = make_task("plan_root", verb="serve", actor="service_center",
                     task_id="root", status=TaskStatus.PLANNED)
    for i in range(rng.randint(1, 5)):
        leaf = make_task("step", verb="wait", actor="vehicle",
                         task_id=f"leaf{i}", status=TaskStatus.PLANNED,
                         est_time=rng.randint(0, 60))
        for _ in range(rng.randint(0, 2)):
            kind = rng.choice([ConditionKind.HARD, ConditionKind.FAIL_SKIP])
            leaf.conditions.append(Condition(kind=kind,
                                             predicate=random_predicate(rng)))
        for _ in range(rng.randint(0, 2)):
            op = rng.choice([EffectOp.SET, EffectOp.ADD, EffectOp.CLEAR])
            if op is EffectOp.SET:
                effect = Effect(rng.choice(PATHS), op, rng.choice(VALUES))
            elif op is EffectOp.ADD:
                effect = Effect(rng.choice(["n.i", "n.j"]), op, rng.randint(1, 4))
            else:
                effect = Effect(rng.choice(PATHS), op)
            leaf.effects.append(effect)
        for _ in range(rng.randint(0, 1)):
            leaf.goals.append(random_predicate(rng))
        leaf.parent_task = "root"
        root.sub_tasks.append(leaf)
    facts = {
        path: rng.choice(VALUES)
        for path in rng.sample(PATHS, k=rng.randint(0, len(PATHS)))
    }
    extra = [random_predicate(rng) for _ in range(rng.randint(0, 2))]
    return root, facts, extra


def test_verdicts_match_fold_oracle_on_random_plans():
    rng = random.Random(20240812)
    registry = build_default_registry()
    for _ in range(200):
        root, facts, extra = random_linear_plan(rng)
        expected, _ = oracle_verdict(root.sub_tasks, facts, extra)
        report = validate_plan(root, WorldState(facts=facts), extra, registry)
        assert report.verdict == expected


def test_final_simulated_state_matches_effect_fold():
    rng = random.Random(31)
    registry = build_default_registry()
    for _ in range(50):
        root, facts, _ = random_linear_plan(rng)
        for leaf in root.sub_tasks:
            leaf.conditions.clear()
            leaf.goals.clear()
        state = WorldState(facts=facts)
        for leaf in root.sub_tasks:
            state, outcome = simulate_task(leaf, state, registry)
            assert outcome == "ok"
        _, expected_facts = oracle_verdict(root.sub_tasks, facts, [])
        assert state.facts == expected_facts


# ----------------------------------------------------------------------
# concrete behaviors


def _pharmacy_plan(offboard_location: str) -> Task:
    root = make_task("trip_task", verb="serve_trip", actor="service_center",
                     task_id="trip", status=TaskStatus.EXECUTING)
    root.goals = [Predicate("trip.final_destination", PredicateOp.EQ,
                            "@path:trip.original_destination")]
    aborted = make_task("drive_task", verb="drive", actor="map",
                        task_id="d1", status=TaskStatus.ABORTED)
    stop_drive = make_task("drive_task", verb="drive", actor="map",
                           task_id="d2", status=TaskStatus.UNPLANNED,
                           specs={"destination": "Corner Pharmacy"},
                           effects=[Effect("vehicle.location", EffectOp.SET,
                                           "@task:specs.destination")])
    offboard = make_task("offboard_task", verb="offboard", actor="vehicle",
                         task_id="o1", status=TaskStatus.UNPLANNED,
                         specs={"location": offboard_location},
                         effects=[Effect("trip.final_destination", EffectOp.SET,
                                         "@task:specs.location")])
    for child in (aborted, stop_drive, offboard):
        child.parent_task = root.id
        root.sub_tasks.append(child)
    return root


def test_detour_without_return_fails_destination_goal():
    root = _pharmacy_plan("Corner Pharmacy")
    state = WorldState(facts={"trip.original_destination": "Grand Hotel"})
    goal = Predicate("trip.final_destination", PredicateOp.EQ,
                     "@path:trip.original_destination")
    report = validate_plan(root, state, [goal], build_default_registry())
    assert report.verdict == "fail"
    assert report.failed_goal is not None
    assert report.failed_goal.path == "trip.final_destination"


def test_detour_with_return_passes():
    root = _pharmacy_plan("Grand Hotel")
    state = WorldState(facts={"trip.original_destination": "Grand Hotel"})
    goal = Predicate("trip.final_destination", PredicateOp.EQ,
                     "@path:trip.original_destination")
    report = validate_plan(root, state, [goal], build_default_registry())
    assert report.verdict == "pass"


def test_fully_executed_plan_passes_with_empty_trace():
    root = make_task("trip_task", status=TaskStatus.FINISHED)
    report = validate_plan(root, WorldState(), [], build_default_registry())
    assert report.verdict == "pass"
    assert report.trace == []


def test_validation_never_mutates_plan_or_state():
    root = _pharmacy_plan("Grand Hotel")
    state = WorldState(facts={"trip.original_destination": "Grand Hotel"})
    plan_before = serialize_task(root)
    facts_before = dict(state.facts)
    validate_plan(root, state, [], build_default_registry())
    assert serialize_task(root) == plan_before
    assert state.facts == facts_before


def test_simulation_mode_never_consumes_real_responses():
    registry = build_default_registry()
    registry.extend_script("vehicle.close_window",
                           [{"fail": "jam"}, {"value": {"ok": True}}])
    leaf = make_task("close-window", verb="close_window", actor="vehicle",
                     status=TaskStatus.PLANNED)
    state = WorldState()
    simulate_task(leaf, state, registry)
    simulate_task(leaf, state, registry)
    # first real call still sees the scripted jam
    from vsa.errors import ActorFailure
    with pytest.raises(ActorFailure):
        registry.invoke("vehicle.close_window", {}, mode="real")


def test_missing_simulation_handler_fails_with_trace():
    registry = build_default_registry()
    registry.extend_script("vehicle.eject", [])
    registry._functions["vehicle.eject"].simulation = None
    root = make_task("plan_root", status=TaskStatus.PLANNED)
    leaf = make_task("eject", verb="eject", actor="vehicle",
                     task_id="e1", status=TaskStatus.PLANNED,
                     parent_task=root.id)
    root.sub_tasks.append(leaf)
    report = validate_plan(root, WorldState(), [], build_default_registry())
    assert report.verdict == "fail"
    assert report.trace[-1].phase == "simulate"
    with pytest.raises(SimulationUnsupported):
        simulate_task(leaf, WorldState(), registry)


def test_clock_advances_by_estimate_sum():
    registry = build_default_registry()
    root = make_task("plan_root", status=TaskStatus.PLANNED)
    total = 0
    for i, est in enumerate([10, 540, 50]):
        leaf = make_task("step", verb="wait", actor="vehicle",
                         task_id=f"s{i}", est_time=est,
                         status=TaskStatus.PLANNED, parent_task=root.id)
        root.sub_tasks.append(leaf)
        total += est
    state = WorldState(clock=100)
    for leaf in root.sub_tasks:
        state, _ = simulate_task(leaf, state, registry)
    assert state.clock == 100 + total


def test_leaf_without_effects_only_advances_clock():
    leaf = make_task("wait_task", verb="wait", actor="vehicle", est_time=900,
                     status=TaskStatus.PLANNED)
    state = WorldState(facts={"a.b": 1}, clock=5)
    after, outcome = simulate_task(leaf, state, build_default_registry())
    assert outcome == "ok"
    assert after.facts == {"a.b": 1}
    assert after.clock == 905


def test_bind_effects_resolves_task_references():
    drive = make_task("drive_task", verb="drive", actor="map",
                      specs={"destination": "Dequindre Rd"},
                      effects=[Effect("vehicle.location", EffectOp.SET,
                                      "@task:specs.destination")])
    bound = bind_effects(drive)
    assert bound[0].value == "Dequindre Rd"
    from vsa.worldstate import apply_effect
    state = apply_effect(WorldState(), bound[0])
    assert state.get("vehicle.location") == "Dequindre Rd"


def test_fail_skip_condition_skips_subtree_in_simulation():
    root = make_task("plan_root", status=TaskStatus.PLANNED)
    skippy = make_task("optional", verb="wait", actor="vehicle",
                       task_id="sk", status=TaskStatus.PLANNED,
                       parent_task=root.id,
                       effects=[Effect("mark.done", EffectOp.SET, True)])
    skippy.conditions.append(Condition(
        kind=ConditionKind.FAIL_SKIP,
        predicate=Predicate("never.there", PredicateOp.EXISTS),
    ))
    root.sub_tasks.append(skippy)
    report = validate_plan(root, WorldState(),
                           [Predicate("mark.done", PredicateOp.ABSENT)],
                           build_default_registry())
    assert report.verdict == "pass"
    assert any(t.outcome == "skip" for t in report.trace)


def test_trace_follows_execution_order():
    registry = build_default_registry()
    root = make_task("plan_root", status=TaskStatus.PLANNED, task_id="root")
    for i in range(3):
        leaf = make_task("step", verb="wait", actor="vehicle",
                         task_id=f"s{i}", status=TaskStatus.PLANNED,
                         parent_task="root",
                         goals=[Predicate("never.set", PredicateOp.ABSENT)])
        root.sub_tasks.append(leaf)
    report = validate_plan(root, WorldState(), [], registry)
    simulated = [t.task_id for t in report.trace if t.phase == "simulate"]
    assert simulated == ["s0", "s1", "s2"]
