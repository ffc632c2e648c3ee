"""HTTP service over the engine: snapshots, event stream, remedy intake.

The engine publishes immutable snapshots after every event; requests are
served from the latest snapshot so reads never block execution. Remedy
submissions funnel through the escalation bridge into the handling loop
and answer with the validation verdict once it completes.
"""

from __future__ import annotations

import json
import queue as queue_mod
import threading
from pathlib import Path
from fastapi import FastAPI, Request
from fastapi.responses import FileResponse, JSONResponse, StreamingResponse

from .engine import Engine
from .errors import VsaError
from .handling import InteractiveEscalationBridge
from .library import similarity
from .remedy import parse_remedy
from .task import canonical_json


class GatewayHub:
    """Thread-safe buffer between the engine thread and request handlers."""

    def __init__(self, access_log_path: str | None = None):
        self._lock = threading.Lock()
        self._snapshot: dict = {"seq": 0, "plan": None, "state": None,
                                "situations": [], "pending_situations": [],
                                "escalated_ids": [], "last_validation": None}
        self._events: list[dict] = []
        self._clients: list[queue_mod.Queue] = []
        self.access_log: list[str] = []
        self._access_file = None
        if access_log_path:
            path = Path(access_log_path)
            path.parent.mkdir(parents=True, exist_ok=True)
            self._access_file = path.open("w", encoding="utf-8")

    def wire(self, engine: Engine) -> None:
        engine.subscribers.append(self.on_event)
        engine.snapshot_sink = self.on_snapshot
        engine.publish_snapshot()

    def on_event(self, event) -> None:
        message = {"type": "event", "event": event.to_json()}
        with self._lock:
            self._events.append(message)
            clients = list(self._clients)
        for client in clients:
            client.put(message)

    def on_snapshot(self, snapshot: dict) -> None:
        with self._lock:
            self._snapshot = snapshot

    def snapshot(self) -> dict:
        with self._lock:
            return self._snapshot

    def subscribe(self) -> tuple[list[dict], queue_mod.Queue]:
        client: queue_mod.Queue = queue_mod.Queue()
        with self._lock:
            backlog = list(self._events)
            self._clients.append(client)
        return backlog, client

    def unsubscribe(self, client: queue_mod.Queue) -> None:
        with self._lock:
            if client in self._clients:
                self._clients.remove(client)

    def log_access(self, method: str, path: str, status: int) -> None:
        line = f"{method} {path} {status}"
        with self._lock:
            self.access_log.append(line)
            if self._access_file:
                self._access_file.write(line + "\n")
                self._access_file.flush()


def _error(status: int, code: str, message: str, path: str | None = None) -> JSONResponse:
    body = {"code": code, "message": message}
    if path is not None:
        body["path"] = path
    return JSONResponse(body, status_code=status)


def create_app(engine: Engine, hub: GatewayHub,
               frontend_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="vsa gateway")

    @app.middleware("http")
    async def access_logger(request: Request, call_next):
        response = await call_next(request)
        hub.log_access(request.method, request.url.path, response.status_code)
        return response

    @app.get("/api/plan")
    def get_plan():
        return {"seq": hub.snapshot()["seq"], "plan": hub.snapshot()["plan"]}

    @app.get("/api/state")
    def get_state():
        return {"seq": hub.snapshot()["seq"], "state": hub.snapshot()["state"]}

    @app.get("/api/situations")
    def list_situations(status: str | None = None):
        snapshot = hub.snapshot()
        items = snapshot["situations"]
        if status:
            items = [s for s in items if s["status"] == status]
        pending = set()
        if isinstance(engine.bridge, InteractiveEscalationBridge):
            pending = engine.bridge.pending_ids()
        items = [dict(s, awaiting_remedy=s["id"] in pending) for s in items]
        return {"seq": snapshot["seq"], "situations": items}

    @app.get("/api/situations/{situation_id}")
    def get_situation(situation_id: str):
        for item in hub.snapshot()["situations"]:
            if item["id"] == situation_id:
                return item
        return _error(404, "not_found", f"no situation {situation_id}",
                      path=situation_id)

    @app.post("/api/situations/{situation_id}/remedy")
    async def post_remedy(situation_id: str, request: Request):
        try:
            body = await request.json()
        except json.JSONDecodeError:
            return _error(400, "malformed_document", "body is not JSON")
        remedy_json = body.get("remedy") if isinstance(body, dict) else body
        if not isinstance(remedy_json, list):
            return _error(400, "schema_violation", "remedy must be a list", path="remedy")
        try:
            parse_remedy(remedy_json)
        except VsaError as exc:
            return _error(400, exc.code, exc.message,
                          path=exc.details.get("path"))

        known = {s["id"] for s in hub.snapshot()["situations"]}
        if situation_id not in known:
            return _error(404, "not_found", f"no situation {situation_id}",
                          path=situation_id)
        bridge = engine.bridge
        if not isinstance(bridge, InteractiveEscalationBridge):
            return _error(409, "not_escalated",
                          "engine is not accepting interactive remedies")
        try:
            result = bridge.submit(situation_id, remedy_json)
        except KeyError:
            return _error(409, "not_escalated",
                          f"situation {situation_id} is not awaiting a remedy")
        status = 200
        report = result.get("report") or {}
        trace_codes = {
            (entry.get("detail") or {}).get("code")
            for entry in report.get("trace", [])
            if isinstance(entry.get("detail"), dict)
        }
        if result["verdict"] == "fail" and "target_executed" in trace_codes:
            status = 409
        return JSONResponse(result, status_code=status)

    @app.get("/api/library/situations")
    def query_library(name: str | None = None, min_score: float = 0.0,
                      context: str | None = None):
        try:
            query_context = json.loads(context) if context else {}
        except json.JSONDecodeError:
            return _error(400, "malformed_document", "context is not JSON",
                          path="context")
        results = []
        for record in engine.library.records("situation"):
            if name and record.name != name:
                continue
            score = similarity(query_context, record.context)
            if score.value < min_score:
                continue
            results.append({
                "id": record.id,
                "name": record.name,
                "context": record.context,
                "score": score.value,
                "payload": record.payload_json(),
            })
        results.sort(key=lambda r: -r["score"])
        return {"results": results}

    @app.get("/api/palette")
    def palette():
        return {
            "templates": [
                {"name": record.name, "context": record.context,
                 "task": record.payload_json()}
                for record in engine.library.templates()
            ],
            "verbs": ["add", "delete", "modify", "abort"],
            "anchors": ["after", "before", "at"],
            "selectors": [
                "executing task", "situation context", "situation",
                "task:<task_name>@next", "task:<task_name>@prev",
                "new_task:<i>",
            ],
        }

    @app.get("/api/access_log")
    def access_log():
        return {"entries": list(hub.access_log)}

    @app.get("/api/events")
    def events(limit: int | None = None):
        backlog, client = hub.subscribe()

        def stream():
            sent = 0
            try:
                for message in backlog:
                    yield f"data: {canonical_json(message)}\n\n"
                    sent += 1
                    if limit is not None and sent >= limit:
                        return
                while True:
                    try:
                        message = client.get(timeout=1.0)
                    except queue_mod.Empty:
                        yield ": keepalive\n\n"
                        continue
                    yield f"data: {canonical_json(message)}\n\n"
                    sent += 1
                    if limit is not None and sent >= limit:
                        return
            finally:
                hub.unsubscribe(client)

        return StreamingResponse(stream(), media_type="text/event-stream")

    if frontend_dir is not None:
        frontend = Path(frontend_dir)

        @app.get("/")
        def index():
            return FileResponse(frontend / "index.html")

        @app.get("/{asset_path:path}")
        def assets(asset_path: str):
            target = (frontend / asset_path).resolve()
            if frontend.resolve() not in target.parents or not target.is_file():
                return _error(404, "not_found", asset_path)
            return FileResponse(target)

    return app
