from __future__ import annotations

import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vsa.errors import MalformedDocument, SchemaViolation, UnboundReference
from vsa.task import (
    Action,
    IdGenerator,
    Task,
    TaskStatus,
    apply_mapping,
    clone_task,
    deserialize_task,
    serialize_task,
)

from conftest import make_task


# ----------------------------------------------------------------------
# schema-driven random task generator (seeded, independent of hypothesis)

_STATUSES = [s.value for s in TaskStatus]


def random_task(rng: random.Random, depth: int = 0, parent: str | None = None,
                counter: list[int] | None = None) -> Task:
    counter = counter if counter is not None else [0]
    counter[0] += 1
    task_id = f"r{counter[0]}"
    roles = rng.sample(["origin", "dest", "who", "what"], k=rng.randint(0, 3))
    action = Action(
        verb=rng.choice(["drive", "wait", "confirm", "move"]),
        args=[(role, rng.choice(["x", 3, True, None])) for role in roles],
        actor=rng.choice(["vehicle", "map", "chat", ""]),
    )
    task = Task(
        id=task_id,
        task_name=rng.choice(["trip_task", "drive_task", "close-window", "job"]),
        action=action,
        parent_task=parent,
        specs={"k": rng.randint(0, 9), "nested": {"a": rng.choice(["s", 1.5, False])}},
        context={"has_luggage": rng.choice([True, False])},
        est_time=rng.randint(0, 900),
        actual_duration=rng.choice([None, rng.randint(0, 900)]),
        mapping={"specs.k": "parent.specs.k"} if rng.random() < 0.4 else {},
        status=TaskStatus(rng.choice(_STATUSES)),
    )
    if depth < 3:
        for _ in range(rng.randint(0, 3 - depth)):
            task.sub_tasks.append(random_task(rng, depth + 1, task_id, counter))
    return task


def test_round_trip_1000_random_tasks():
    rng = random.Random(20240811)
    for _ in range(1000):
        task = random_task(rng)
        text = serialize_task(task)
        back = deserialize_task(text)
        assert serialize_task(back) == text


@settings(max_examples=100, deadline=None)
@given(st.integers(min_value=0, max_value=2**32 - 1))
def test_round_trip_property(seed):
    task = random_task(random.Random(seed))
    assert serialize_task(deserialize_task(serialize_task(task))) == serialize_task(task)


def _trip_fixture() -> Task:
    trip = make_task("trip_task", verb="serve_trip", actor="service_center",
                     task_id="trip-1")
    for i, name in enumerate(["drive_task", "onboard_task", "drive_task",
                              "offboard_task"]):
        trip.sub_tasks.append(
            make_task(name, task_id=f"sub-{i}", parent_task="trip-1")
        )
    return trip


def test_trip_serializes_with_four_sub_tasks():
    text = serialize_task(_trip_fixture())
    assert '"task_name":"trip_task"' in text
    data = json.loads(text)
    assert len(data["sub_tasks"]) == 4


def test_leaf_serializes_empty_sub_tasks():
    assert '"sub_tasks":[]' in serialize_task(make_task("leaf"))


def test_all_fields_present_with_nulls():
    data = json.loads(serialize_task(make_task("leaf")))
    assert data["actual_duration"] is None
    assert data["parent_task"] is None
    assert set(data) == {
        "id", "task_name", "parent_task", "sub_tasks", "action", "specs",
        "conditions", "effects", "context", "goals", "est_time",
        "actual_duration", "mapping", "status",
    }


def test_canonical_form_is_stable():
    text = serialize_task(_trip_fixture())
    again = serialize_task(deserialize_task(text))
    assert again == text
    assert serialize_task(deserialize_task(again)) == again


def test_round_trip_restores_structure():
    trip = _trip_fixture()
    back = deserialize_task(serialize_task(trip))
    assert back.to_json() == trip.to_json()


def test_malformed_json_rejected():
    with pytest.raises(MalformedDocument):
        deserialize_task("{not json")


def test_unknown_status_names_path():
    data = json.loads(serialize_task(make_task("leaf")))
    data["status"] = "flying"
    with pytest.raises(SchemaViolation) as excinfo:
        deserialize_task(json.dumps(data))
    assert excinfo.value.path == "status"


def test_missing_action_names_path():
    data = json.loads(serialize_task(make_task("leaf")))
    del data["action"]
    with pytest.raises(SchemaViolation) as excinfo:
        deserialize_task(json.dumps(data))
    assert excinfo.value.path == "action"


@pytest.mark.parametrize("field", ["id", "task_name", "action"])
def test_every_required_field_enforced(field):
    data = json.loads(serialize_task(make_task("leaf")))
    del data[field]
    with pytest.raises(SchemaViolation) as excinfo:
        deserialize_task(json.dumps(data))
    assert excinfo.value.path == field


def test_nested_error_path_names_sub_task():
    trip = _trip_fixture()
    data = json.loads(serialize_task(trip))
    data["sub_tasks"][1]["status"] = "bogus"
    with pytest.raises(SchemaViolation) as excinfo:
        deserialize_task(json.dumps(data))
    assert excinfo.value.path == "sub_tasks[1].status"


def test_extra_field_rejected():
    data = json.loads(serialize_task(make_task("leaf")))
    data["astral_plane"] = 1
    with pytest.raises(SchemaViolation) as excinfo:
        deserialize_task(json.dumps(data))
    assert excinfo.value.path == "astral_plane"


def test_spec_alias_normalized_on_read():
    data = json.loads(serialize_task(make_task("leaf")))
    data["spec"] = data.pop("specs") | {"origin": "Meyers Rd"}
    task = deserialize_task(json.dumps(data))
    assert task.specs["origin"] == "Meyers Rd"


def test_parent_links_repaired_on_read():
    trip = _trip_fixture()
    data = json.loads(serialize_task(trip))
    data["sub_tasks"][0]["parent_task"] = "wrong"
    task = deserialize_task(json.dumps(data))
    assert task.sub_tasks[0].parent_task == "trip-1"


def test_action_duplicate_roles_rejected():
    with pytest.raises(SchemaViolation):
        Action(verb="move", args=[("a", 1), ("a", 2)])


def test_action_empty_verb_rejected():
    with pytest.raises(SchemaViolation):
        Action(verb="")


# ----------------------------------------------------------------------
# mapping


def _parent_with_specs() -> Task:
    return make_task("trip_task", task_id="parent-1",
                     specs={"origin": "Meyers Rd", "destination": "Dequindre Rd"})


def test_mapping_binds_origin_and_destination_from_parent():
    parent = _parent_with_specs()
    child = make_task("drive_task", task_id="child-1")
    mapping = {
        "spec.origin": "parent.specs.origin",
        "specs.destination": "parent.specs.destination",
    }
    bound = apply_mapping(child, mapping, {"parent": parent})
    assert bound.specs["origin"] == "Meyers Rd"
    assert bound.specs["destination"] == "Dequindre Rd"


def test_empty_mapping_returns_unchanged_task():
    child = make_task("drive_task")
    bound = apply_mapping(child, {}, {})
    assert serialize_task(bound) == serialize_task(child)


def test_mapping_from_context_binding():
    child = make_task("drive_task")
    bound = apply_mapping(
        child,
        {"specs.dest": "context.current_location"},
        {"context": {"current_location": "Maple Ave & 12th"}},
    )
    assert bound.specs["dest"] == "Maple Ave & 12th"


def test_mapping_is_idempotent():
    parent = _parent_with_specs()
    child = make_task("drive_task")
    mapping = {"specs.origin": "parent.specs.origin"}
    once = apply_mapping(child, mapping, {"parent": parent})
    twice = apply_mapping(once, mapping, {"parent": parent})
    assert serialize_task(once) == serialize_task(twice)


def test_mapping_touches_only_target_paths():
    parent = _parent_with_specs()
    child = make_task("drive_task", specs={"keep": "me"},
                      context={"stay": True})
    bound = apply_mapping(child, {"specs.origin": "parent.specs.origin"},
                          {"parent": parent})
    before = json.loads(serialize_task(child))
    after = json.loads(serialize_task(bound))
    assert after["specs"].pop("origin") == "Meyers Rd"
    assert before == after


def test_mapping_does_not_mutate_input():
    child = make_task("drive_task")
    snapshot = serialize_task(child)
    apply_mapping(child, {"specs.origin": "parent.specs.origin"},
                  {"parent": _parent_with_specs()})
    assert serialize_task(child) == snapshot


def test_mapping_unbound_reference():
    with pytest.raises(UnboundReference):
        apply_mapping(make_task("x"), {"specs.a": "ghost.specs.a"}, {})


def test_mapping_writes_action_and_estimate():
    parent = make_task("drive_task", task_id="p1",
                       specs={"origin": "A"}, actual_duration=550)
    child = make_task("drive_task")
    bound = apply_mapping(
        child,
        {"action.origin": "parent.specs.origin",
         "action.actor": "parent.actor",
         "estimated_time": "parent.actual_duration"},
        {"parent": parent},
    )
    assert bound.action.arg_map()["origin"] == "A"
    assert bound.action.actor == "vehicle"
    assert bound.est_time == 550


def test_clone_assigns_fresh_consistent_ids():
    trip = _trip_fixture()
    copy = clone_task(trip, IdGenerator("c"), reset=True)
    ids = [t.id for t in copy.walk()]
    assert len(ids) == len(set(ids))
    assert all(t.id.startswith("c-") for t in copy.walk())
    for node in copy.walk():
        for sub in node.sub_tasks:
            assert sub.parent_task == node.id
    assert all(t.status is TaskStatus.UNPLANNED for t in copy.walk())
