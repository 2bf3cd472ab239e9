"""HTTP rule server.

Clients post a trace and an event; the server evokes the rules
subscribed to that event and answers with verdicts. It never changes the
trace: applying alignment steps is the client's job.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from starlette.concurrency import run_in_threadpool

from ..engine import Registry, build_registry, evoke
from ..mlm import Mlm
from ..mlm.bundle import load_bundle
from ..wire import WireError, event_from_wire, trace_from_wire, verdict_to_wire

DEFAULT_MAX_BODY = 16 * 1024 * 1024


@dataclass(frozen=True)
class ModelVersion:
    version: int
    registry: Registry | None
    names: tuple[str, ...] = ()


class ServerState:
    """Current model; replaced as a whole so readers never see a partial one."""

    def __init__(self):
        self._lock = threading.Lock()
        self._current = ModelVersion(0, None)

    @property
    def current(self) -> ModelVersion:
        return self._current

    def install(self, mlms: list[Mlm]) -> int:
        registry = build_registry(mlms)
        with self._lock:
            version = self._current.version + 1
            self._current = ModelVersion(version, registry, tuple(sorted(m.name for m in mlms)))
        return version


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str, **extra):
        super().__init__(message)
        self.status = status
        self.body = {"error": code, "message": message, **extra}


def create_app(mlms: list[Mlm] | None = None, max_body: int = DEFAULT_MAX_BODY) -> FastAPI:
    app = FastAPI(title="mlmconform rule server")
    state = ServerState()
    app.state.rules = state
    if mlms is not None:
        state.install(list(mlms))

    @app.exception_handler(ApiError)
    async def _api_error(request: Request, exc: ApiError):
        return JSONResponse(exc.body, status_code=exc.status)

    async def read_json(request: Request) -> dict:
        declared = request.headers.get("content-length")
        if declared and declared.isdigit() and int(declared) > max_body:
            raise ApiError(413, "BODY_TOO_LARGE", f"request body exceeds {max_body} bytes")
        raw = await request.body()
        if len(raw) > max_body:
            raise ApiError(413, "BODY_TOO_LARGE", f"request body exceeds {max_body} bytes")
        try:
            data = json.loads(raw)
        except (ValueError, RecursionError):
            raise ApiError(400, "MALFORMED_JSON", "request body is not valid JSON") from None
        if not isinstance(data, dict):
            raise ApiError(400, "MALFORMED_REQUEST", "request body must be a JSON object")
        return data

    def loaded() -> ModelVersion:
        model = state.current
        if model.registry is None:
            raise ApiError(409, "NO_MODEL", "no model has been loaded")
        return model

    def parse_trace(data: dict):
        try:
            return trace_from_wire(data.get("trace"))
        except WireError as exc:
            raise ApiError(400, "MALFORMED_TRACE", str(exc)) from None

    @app.get("/health")
    def health():
        return {"status": "ok", "model_version": state.current.version}

    @app.get("/model")
    def model_info():
        model = state.current
        subs = sorted(model.registry.event_names) if model.registry else []
        return {"model_version": model.version, "mlms": list(model.names), "subscriptions": subs}

    @app.post("/model")
    async def upload_model(request: Request):
        data = await read_json(request)
        files = data.get("files")
        if not isinstance(files, dict) or not all(
                isinstance(k, str) and isinstance(v, str) for k, v in files.items()):
            raise ApiError(400, "MALFORMED_REQUEST", "'files' must map file names to rule text")
        mlms, diagnostics = await run_in_threadpool(load_bundle, files)
        if any(d["severity"] == "error" for d in diagnostics):
            raise ApiError(422, "MODEL_REJECTED", "model has fatal diagnostics",
                           diagnostics=diagnostics, model_version=state.current.version)
        version = state.install(mlms)
        return {"model_version": version, "diagnostics": diagnostics}

    @app.post("/evoke")
    async def evoke_one(request: Request):
        data = await read_json(request)
        model = loaded()
        trace = parse_trace(data)
        index = _event_index(trace, data.get("event"))
        verdicts = await run_in_threadpool(evoke, model.registry, trace, index)
        return {"model_version": model.version, "verdicts": [verdict_to_wire(v) for v in verdicts]}

    @app.post("/evoke_batch")
    async def evoke_batch(request: Request):
        # extension: every event of the trace in one call
        data = await read_json(request)
        model = loaded()
        trace = parse_trace(data)

        def run():
            return [[verdict_to_wire(v) for v in evoke(model.registry, trace, i)]
                    for i in range(len(trace.events))]

        return {"model_version": model.version, "verdicts": await run_in_threadpool(run)}

    return app


def _event_index(trace, event) -> int:
    if isinstance(event, int) and not isinstance(event, bool):
        if 0 <= event < len(trace.events):
            return event
        raise ApiError(400, "EVENT_NOT_IN_TRACE", f"event index {event} is out of range")
    if isinstance(event, dict):
        try:
            wanted = event_from_wire(event)
        except WireError as exc:
            raise ApiError(400, "MALFORMED_EVENT", str(exc)) from None
        for i, e in enumerate(trace.events):
            if e == wanted:
                return i
        raise ApiError(400, "EVENT_NOT_IN_TRACE", "event does not occur in the trace")
    raise ApiError(400, "MALFORMED_EVENT", "'event' must be an index or an event object")
