"""Command-line entry points."""

from __future__ import annotations

import json
import sys
import tempfile
import threading
from pathlib import Path

import click

from .agents import build_default_registry
from .config import EngineConfig
from .errors import VsaError
from .library import CaseLibrary, similarity
from .remedy import parse_remedy
from .scenario import load_scenario, replay_events, run_scenario
from .task import canonical_json, deserialize_task
from .validator import validate_plan
from .worldstate import Predicate, WorldState

_KNOWN_SELECTOR_HEADS = ("task:", "new_task:")
_KNOWN_SELECTORS = ("executing task", "situation context", "situation")


def _fail(as_json: bool, error: VsaError, code: int = 2):
    if as_json:
        click.echo(json.dumps(error.to_json()), err=True)
    else:
        click.echo(f"error: {error.message}", err=True)
    sys.exit(code)


@click.group()
def main():
    """Virtual service agent: scenario runs, validation, and libraries."""


@main.command()
@click.argument("scenario", type=click.Path(exists=True))
@click.option("--serve", default=None, help="host:port to serve the gateway on")
@click.option("--interactive", is_flag=True, help="route escalations to the gateway")
@click.option("--seed", type=int, default=0)
@click.option("--threshold", type=float, default=None)
@click.option("--library", "library_path", default=None,
              help="library dir (persists across runs); default is a fresh temp dir")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--event-log", default=None, help="write the event log (JSON lines) here")
@click.option("--access-log", default=None, help="write the gateway access log here")
@click.option("--json", "as_json", is_flag=True)
def run(scenario, serve, interactive, seed, threshold, library_path,
        config_path, event_log, access_log, as_json):
    """Run a scenario; exit 0 iff every expectation passes."""
    if library_path is None:
        library_path = tempfile.mkdtemp(prefix="vsa-library-")
    try:
        config = EngineConfig.load(
            config_path,
            threshold=threshold,
            seed=seed,
            interactive=interactive or None,
            library_path=library_path,
            event_log_path=event_log,
            access_log_path=access_log,
        )
        script = load_scenario(scenario)
    except (VsaError, ValueError, json.JSONDecodeError) as exc:
        error = exc if isinstance(exc, VsaError) else VsaError(str(exc))
        _fail(as_json, error)
        return

    if serve:
        _run_serving(script, config, serve, as_json)
        return

    try:
        result = run_scenario(script, config)
    except VsaError as exc:
        _fail(as_json, exc)
        return
    payload = result.to_json()
    if as_json:
        click.echo(json.dumps(payload, indent=2))
    else:
        for entry in payload["expectations"]:
            mark = "ok" if entry["passed"] else "FAIL"
            click.echo(f"[{mark}] {entry['name']}: {entry['detail']}")
        click.echo(
            f"{payload['scenario']}: status={payload['final_status']} "
            f"resolved={payload['resolved']} escalations={payload['escalations']}"
        )
    sys.exit(0 if result.passed else 1)


def _run_serving(script: dict, config: EngineConfig, serve: str, as_json: bool):
    import uvicorn

    from .gateway import GatewayHub, create_app
    from .scenario import build_engine

    host, _, port = serve.partition(":")
    hub = GatewayHub(config.access_log_path)
    engine = build_engine(script, config)
    hub.wire(engine)
    frontend = Path(__file__).resolve().parents[2] / "frontend" / "dist"
    app = create_app(engine, hub, frontend_dir=frontend if frontend.exists() else None)

    def drive():
        trip = deserialize_task(script["trip_order"])
        engine.run(trip)
        engine.close()
        click.echo(f"run finished: root={engine.root.status.value}", err=True)

    thread = threading.Thread(target=drive, daemon=True)
    thread.start()
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or config.port),
                log_level="warning")


@main.command()
@click.argument("plan", type=click.Path(exists=True))
@click.option("--state", "state_path", type=click.Path(exists=True), required=True)
@click.option("--goals", "goals_path", type=click.Path(exists=True), default=None)
@click.option("--json", "as_json", is_flag=True)
def validate(plan, state_path, goals_path, as_json):
    """Simulate a plan's unexecuted remainder; exit 0 iff it validates."""
    try:
        root = deserialize_task(Path(plan).read_text(encoding="utf-8"))
        state = WorldState.from_json(
            json.loads(Path(state_path).read_text(encoding="utf-8"))
        )
        goals = []
        if goals_path:
            goals = [
                Predicate.from_json(g)
                for g in json.loads(Path(goals_path).read_text(encoding="utf-8"))
            ]
    except VsaError as exc:
        _fail(as_json, exc)
        return
    report = validate_plan(root, state, goals, build_default_registry())
    if as_json:
        click.echo(json.dumps(report.to_json(), indent=2))
    else:
        click.echo(f"verdict: {report.verdict}")
        for entry in report.trace:
            click.echo(f"  {entry.task_id} {entry.phase}: {entry.outcome}")
    sys.exit(0 if report.passed else 1)


@main.command()
@click.argument("eventlog", type=click.Path(exists=True))
@click.option("--json", "as_json", is_flag=True)
def replay(eventlog, as_json):
    """Re-emit a stored event log in order."""
    for event in replay_events(eventlog):
        if as_json:
            click.echo(canonical_json(event))
        else:
            click.echo(
                f"{event['seq']:5d} t={event['time']:<6d} "
                f"{event['kind']:<18} {event['task_id']} "
                f"{event['detail'].get('task_name', '')}"
            )
    sys.exit(0)


@main.group()
def library():
    """Inspect a case library directory."""


@library.command("ls")
@click.option("--library", "library_path", required=True)
def library_ls(library_path):
    lib = CaseLibrary(library_path)
    click.echo(f"templates: {len(lib.templates())}")
    click.echo(f"task cases: {lib.count('task')}")
    click.echo(f"situation cases: {lib.count('situation')}")


@library.command("show")
@click.argument("case_id")
@click.option("--library", "library_path", required=True)
def library_show(case_id, library_path):
    lib = CaseLibrary(library_path)
    record = lib.fetch(case_id)
    if record is None:
        click.echo(f"error: no case {case_id}", err=True)
        sys.exit(1)
    click.echo(json.dumps(record.to_json(), indent=2, sort_keys=True))


@library.command("query")
@click.option("--library", "library_path", required=True)
@click.option("--name", required=True)
@click.option("--context", "context_json", default="{}")
@click.option("--min-score", type=float, default=0.0)
def library_query(library_path, name, context_json, min_score):
    lib = CaseLibrary(library_path)
    context = json.loads(context_json)
    rows = []
    for record in lib.records("situation") + lib.records("task") + lib.templates():
        if record.name != name:
            continue
        score = similarity(context, record.context)
        if score.value >= min_score:
            rows.append((score.value, record))
    rows.sort(key=lambda pair: -pair[0])
    for score, record in rows:
        click.echo(f"{record.id}  score={score:.3f}  {record.kind}  {record.name}")
    sys.exit(0)


@main.group()
def remedy():
    """Remedy tooling."""


@remedy.command("check")
@click.argument("remedy_file", type=click.Path(exists=True))
@click.option("--json", "as_json", is_flag=True)
def remedy_check(remedy_file, as_json):
    """Parse and lint a remedy file without touching any plan."""
    try:
        data = json.loads(Path(remedy_file).read_text(encoding="utf-8"))
        actions = parse_remedy(data)
        report = []
        for i, action in enumerate(actions):
            ast = action.validate()
            for alias, selector in action.references.items():
                selector = selector.strip()
                if selector in _KNOWN_SELECTORS:
                    continue
                if any(selector.startswith(head) for head in _KNOWN_SELECTOR_HEADS):
                    continue
                raise VsaError(
                    f"action {i}: unknown selector {selector!r} for {alias!r}"
                )
            report.append({
                "operation": action.operation,
                "verb": ast.verb.value,
                "anchor": ast.anchor.value,
                "target": ast.target,
            })
    except (VsaError, json.JSONDecodeError) as exc:
        error = exc if isinstance(exc, VsaError) else VsaError(str(exc))
        _fail(as_json, error)
        return
    if as_json:
        click.echo(json.dumps({"ok": True, "actions": report}, indent=2))
    else:
        for row in report:
            click.echo(f"{row['verb']} {row['anchor']} {row['target']}")
    sys.exit(0)


if __name__ == "__main__":
    main()
