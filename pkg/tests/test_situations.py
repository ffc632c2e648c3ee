from __future__ import annotations

import json

from vsa.handling import ScriptedEscalationBridge
from vsa.library import CaseLibrary
from vsa.situations import Situation, SituationQueue, SituationStatus
from vsa.task import TaskStatus

from conftest import SCENARIOS, load_json, make_engine, make_task


def _seed_case(library: CaseLibrary, path):
    situation = Situation.from_json(load_json(path))
    return library.store_situation_case(situation)


def test_queue_is_fifo_and_consumes_once():
    queue = SituationQueue()
    for name in ("a", "b", "c"):
        queue.push(Situation(name=name, time=0, task=None))
    assert [queue.pop().name for _ in range(3)] == ["a", "b", "c"]
    assert queue.pop() is None


def test_raise_fills_logics_from_library_class(seeded_library):
    _seed_case(seeded_library,
               SCENARIOS / "window_leak" / "situations" / "wet_in_cabin.json")
    engine = make_engine(seeded_library, script={
        "weather.current_weather": {"default": {"value": "rain"}},
        "vda.checking_window": {"default": {"value": False}},
        "chat.wetness": {"default": {"value": "water on the door panel"}},
    })
    situation = engine.raise_from_header({"name": "wet-in-cabin", "context": {}})
    assert len(situation.logics) == 3
    assert situation.context == {
        "window_broken": False,
        "weather": "rain",
        "wetness": "water on the door panel",
    }
    assert situation.status is SituationStatus.CONTEXTUALIZED
    assert len(engine.queue) == 1


def test_unknown_class_enqueued_with_empty_logics(library):
    engine = make_engine(library)
    situation = engine.raise_from_header({"name": "never-seen", "context": {"a": 1}})
    assert situation.logics == {}
    assert situation.context == {"a": 1}
    assert len(engine.queue) == 1


def test_run_logics_carry_over_never_overwrites(seeded_library):
    _seed_case(seeded_library,
               SCENARIOS / "window_leak" / "situations" / "window_fail_to_close.json")
    calls = []
    engine = make_engine(seeded_library, script={
        "vda.close_wdw_status": {"default": {"value": "SHOULD NOT APPEAR"}},
        "vda.wdw_malfunc_detect": {"default": {"value": False}},
        "vda.broken_wdw_detect": {"default": {"value": False}},
    })
    original_invoke = engine.agents.invoke
    engine.agents.invoke = lambda ref, args=None, mode="real": (
        calls.append(ref) or original_invoke(ref, args, mode)
    )
    situation = engine.raise_from_header({
        "name": "window-fail-to-close",
        "context": {"close_window": True},
    })
    assert situation.context["close_window"] is True
    assert "vda.close_wdw_status" not in calls
    assert situation.context["window_malfunc"] is False


def test_run_logics_records_unavailable_functions(library):
    engine = make_engine(library)
    situation = Situation(name="s", time=0, task=None,
                          logics={"k": "nowhere.nothing"})
    result = engine.handler.run_logics(situation, engine.agents)
    assert result.unavailable == ["k"]
    assert "k" not in situation.context


def test_empty_logics_leave_context_unchanged(library):
    engine = make_engine(library)
    situation = Situation(name="s", time=0, task=None, context={"a": 1})
    engine.handler.run_logics(situation, engine.agents)
    assert situation.context == {"a": 1}


def _engine_with_plan(library, **kwargs):
    engine = make_engine(library, **kwargs)
    root = make_task("trip_task", task_id="root", status=TaskStatus.EXECUTING)
    leaf = make_task("drive_task", task_id="leaf", status=TaskStatus.EXECUTING,
                     parent_task="root", verb="drive", actor="map")
    tail = make_task("offboard_task", task_id="tail", status=TaskStatus.PLANNED,
                     parent_task="root", verb="offboard", actor="vehicle")
    root.sub_tasks = [leaf, tail]
    engine.root = root
    return engine


def test_unreachable_threshold_always_escalates(library):
    library.store_situation_case(
        Situation(name="s", time=0, task=None, context={"a": 1},
                  remedy=[{"operation": "add after the this_task",
                           "references": {}, "mapping": {},
                           "with_task": make_task("wait_task", verb="wait").to_json()}])
    )
    engine = _engine_with_plan(library)
    engine.bridge = ScriptedEscalationBridge()  # no answers -> timeout
    situation = Situation(name="s", time=0, task="leaf", context={"a": 1},
                          status=SituationStatus.CONTEXTUALIZED, id="s-1")
    outcome = engine.handler.handle_situation(situation, engine, threshold=1.1)
    assert outcome == "unresolved"
    assert engine.escalation_count == 1
    assert situation.status is SituationStatus.UNRESOLVED


def test_resolved_situation_stores_exactly_one_case(library):
    library.store_situation_case(
        Situation(name="s", time=0, task=None, context={"a": 1},
                  remedy=[{"operation": "add after the this_task",
                           "references": {}, "mapping": {},
                           "with_task": make_task("wait_task", verb="wait",
                                                  actor="vehicle").to_json()}])
    )
    engine = _engine_with_plan(library)
    before = library.situation_case_count("s")
    situation = Situation(name="s", time=0, task="leaf", context={"a": 1},
                          status=SituationStatus.CONTEXTUALIZED, id="s-1")
    outcome = engine.handler.handle_situation(situation, engine, threshold=0.6)
    assert outcome == "resolved"
    assert library.situation_case_count("s") == before + 1
    assert situation.status is SituationStatus.RESOLVED
    # the repair landed in the committed plan
    assert [t.task_name for t in engine.root.sub_tasks] == [
        "drive_task", "wait_task", "offboard_task"
    ]
    assert engine.root.context["repaired_by"] == ["s"]


def test_retry_budget_bounds_candidate_probes(library):
    # four stored cases whose remedies all fail structurally
    bad_remedy = [{"operation": "delete at gone_task",
                   "references": {"gone_task": "task:ghost@next"},
                   "mapping": {}}]
    for i in range(4):
        library.store_situation_case(
            Situation(name="s", time=0, task=None, context={"a": 1},
                      remedy=bad_remedy)
        )
    engine = _engine_with_plan(library)
    engine.bridge = ScriptedEscalationBridge()
    situation = Situation(name="s", time=0, task="leaf", context={"a": 1},
                          status=SituationStatus.CONTEXTUALIZED, id="s-1")
    outcome = engine.handler.handle_situation(situation, engine, threshold=0.5)
    assert outcome == "unresolved"
    assert len(engine.retrievals) == 3  # budget, not all four
    assert engine.escalation_count == 1


def test_failing_human_remedy_gets_one_reescalation(library):
    engine = _engine_with_plan(library)
    bad = [{"operation": "delete at gone_task",
            "references": {"gone_task": "task:ghost@next"}, "mapping": {}}]
    bridge = ScriptedEscalationBridge({"s": [bad, bad, bad]})
    engine.bridge = bridge
    situation = Situation(name="s", time=0, task="leaf", context={},
                          status=SituationStatus.CONTEXTUALIZED, id="s-1")
    outcome = engine.handler.handle_situation(situation, engine, threshold=0.6)
    assert outcome == "unresolved"
    assert engine.escalation_count == 2


def test_escalation_payload_carries_context_plan_and_specs(library):
    engine = _engine_with_plan(library)
    engine.root.find("leaf").specs = {"origin": "Meyers Rd"}
    situation = Situation(name="POI_dropoff", time=9, task="leaf",
                          context={"stop_type": "stop_by"}, id="s-9")
    payload = engine.escalation_payload(situation)
    assert payload["situation"]["context"]["stop_type"] == "stop_by"
    assert payload["task_specs"] == {"origin": "Meyers Rd"}
    assert payload["plan"]["id"] == "root"


def test_situation_json_round_trip():
    situation = Situation(
        name="POI_dropoff", time=10, task="d1",
        context={"stop_type": "stop_by", "wait_time": 15},
        logics={"current_location": "map.current_location"},
        remedy=[{"operation": "abort at drive_task", "references": {},
                 "mapping": {}, "with_task": None}],
        status=SituationStatus.RESOLVED, id="s-1",
    )
    back = Situation.from_json(json.loads(json.dumps(situation.to_json())))
    assert back.to_json() == situation.to_json()


def test_queue_accepts_concurrent_producers():
    import threading

    queue = SituationQueue()
    barrier = threading.Barrier(4)

    def produce(prefix: str):
        barrier.wait()
        for i in range(50):
            queue.push(Situation(name=f"{prefix}-{i}", time=0, task=None))

    threads = [threading.Thread(target=produce, args=(p,)) for p in "abc"]
    for t in threads:
        t.start()
    barrier.wait()
    for t in threads:
        t.join()
    names = []
    while (item := queue.pop()) is not None:
        names.append(item.name)
    assert len(names) == 150
    for prefix in "abc":
        ordered = [n for n in names if n.startswith(prefix)]
        assert ordered == [f"{prefix}-{i}" for i in range(50)]
