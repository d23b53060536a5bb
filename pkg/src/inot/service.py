"""HTTP facade over the pipeline Runtime.

Session-scoped endpoints, canonical JSON bodies, and a uniform error shape
``{"error": kind, "detail": s}``. AmbiguousTarget additionally carries the
candidate list (plus the parsed action) so a UI can offer one-click
disambiguation and re-submit a uuid-direct command.
"""

from __future__ import annotations

from pathlib import Path
from typing import Any, Optional

from fastapi import Body, FastAPI, Request
from fastapi.responses import FileResponse, JSONResponse
from starlette.concurrency import run_in_threadpool

from .config import AppConfig, load_config
from .errors import (
    AdapterProtocolError,
    AdapterTimeout,
    AmbiguousTarget,
    InotError,
    MissingFile,
    UnknownSession,
)
from .pipeline import Runtime

_STATUS_BY_KIND = {
    UnknownSession.kind: 404,
    MissingFile.kind: 404,
    AmbiguousTarget.kind: 409,
    AdapterTimeout.kind: 502,
    AdapterProtocolError.kind: 502,
}


def _error_response(exc: InotError) -> JSONResponse:
    payload: dict[str, Any] = {"error": exc.kind, "detail": exc.detail}
    if isinstance(exc, AmbiguousTarget):
        payload["candidates"] = [{"uuid": u, "name": n} for u, n in exc.candidates]
        if exc.action is not None:
            payload["action"] = exc.action.to_json()
    return JSONResponse(status_code=_STATUS_BY_KIND.get(exc.kind, 400), content=payload)


def create_app(config: Optional[AppConfig] = None) -> FastAPI:
    if config is None:
        config = load_config()
    runtime = Runtime(config)
    app = FastAPI(title="inot", docs_url=None, redoc_url=None)
    app.state.runtime = runtime

    @app.exception_handler(InotError)
    async def _inot_error_handler(request: Request, exc: InotError):
        return _error_response(exc)

    @app.post("/api/sessions")
    def create_session():
        return {"session_id": runtime.create_session()}

    @app.post("/api/sessions/{session_id}/inventory")
    def set_inventory(session_id: str, payload: dict = Body(...)):
        text = str(payload.get("text") or "")
        mode = str(payload.get("mode") or "deterministic")
        with runtime.lock(session_id):
            inventory = runtime.set_inventory(session_id, text, mode=mode)
        return {"inventory": dict(inventory.counts)}

    @app.post("/api/sessions/{session_id}/image")
    async def upload_image(session_id: str, request: Request):
        body = await request.body()
        def work():
            with runtime.lock(session_id):
                records = runtime.ingest_image(session_id, body)
                return {
                    "records": [r.to_json() for r in records],
                    "annotated_url": f"/static/{session_id}/annotated.png",
                }
        return await run_in_threadpool(work)

    @app.get("/api/sessions/{session_id}/annotations")
    def get_annotations(session_id: str):
        with runtime.lock(session_id):
            return runtime.get_annotations(session_id)

    @app.put("/api/sessions/{session_id}/annotations")
    def put_annotations(session_id: str, payload: dict = Body(...)):
        with runtime.lock(session_id):
            return runtime.put_annotations(
                session_id,
                payload.get("records") or [],
                payload.get("landmarks") or [],
                payload.get("confirmed") or [],
            )

    @app.post("/api/sessions/{session_id}/annotations/refresh")
    def refresh_annotations(session_id: str):
        with runtime.lock(session_id):
            runtime.refresh_annotations(session_id)
            return runtime.get_annotations(session_id)

    @app.put("/api/sessions/{session_id}/bindings")
    def put_bindings(session_id: str, payload: dict = Body(...)):
        with runtime.lock(session_id):
            bindings = runtime.set_bindings(session_id, dict(payload.get("bindings") or {}))
        return {"bindings": bindings}

    @app.post("/api/sessions/{session_id}/topology")
    def post_topology(session_id: str, payload: dict = Body(default={})):
        mode = str(payload.get("mode") or "deterministic")
        with runtime.lock(session_id):
            graph, report = runtime.compute_topology(session_id, mode=mode)
        return {
            "graph": graph.to_json(),
            "report": report.to_json() if report else None,
        }

    @app.post("/api/sessions/{session_id}/command")
    def post_command(session_id: str, payload: dict = Body(...)):
        with runtime.lock(session_id):
            return runtime.run_command(
                session_id,
                text=payload.get("text"),
                mode=str(payload.get("mode") or "deterministic"),
                dry_run=bool(payload.get("dry_run", False)),
                uuid=payload.get("uuid"),
                action=payload.get("action"),
            )

    @app.get("/api/devices")
    def list_devices():
        return runtime.devices()

    @app.get("/static/{session_id}/{filename}")
    def static_file(session_id: str, filename: str):
        if "/" in filename or filename.startswith("."):
            raise MissingFile("bad filename")
        path = runtime.store.session_path(session_id, filename)
        if not path.exists():
            raise MissingFile(f"no such file {filename} in session {session_id}")
        media = "image/png" if filename.endswith(".png") else "application/octet-stream"
        return FileResponse(path, media_type=media)

    if config.console_dir:
        console_root = Path(config.console_dir).resolve()
        media_types = {
            ".html": "text/html",
            ".css": "text/css",
            ".js": "text/javascript",
            ".png": "image/png",
        }

        @app.get("/console")
        @app.get("/console/{asset:path}")
        def console_asset(asset: str = "index.html"):
            target = (console_root / asset).resolve()
            if not target.is_relative_to(console_root) or not target.is_file():
                raise MissingFile(f"no console asset {asset!r}")
            return FileResponse(
                target, media_type=media_types.get(target.suffix, "application/octet-stream")
            )

    return app
