"""Coordinator REST API.

Handlers only translate between HTTP and coordinator commands; a single lock
serializes every call so the coordinator core stays a single logical loop.
Agents poll: directives ride on heartbeat acks, so the coordinator never
opens a connection toward a provider.
"""

from __future__ import annotations

import threading
from pathlib import Path
from typing import Any

from fastapi import FastAPI, Header, HTTPException, Query, Request
from fastapi.responses import PlainTextResponse
from fastapi.staticfiles import StaticFiles

from gpunion.coordinator.core import Coordinator
from gpunion.coordinator.events import entry_to_wire
from gpunion.domain.ids import NodeId
from gpunion.domain.wire import (
    gpu_descriptor_from_wire,
    job_record_to_wire,
    job_spec_from_wire,
    manifest_from_wire,
    manifest_to_wire,
    node_record_to_wire,
    telemetry_from_wire,
)
from gpunion.errors import (
    GpunionError,
    IllegalTransition,
    StaleSequence,
    Unauthorized,
    UnknownJob,
    UnknownNode,
    ValidationError,
)


def _http_error(exc: Exception) -> HTTPException:
    if isinstance(exc, Unauthorized):
        status = 401
    elif isinstance(exc, (UnknownNode, UnknownJob)):
        status = 404
    elif isinstance(exc, (StaleSequence, IllegalTransition)):
        status = 409
    elif isinstance(exc, (ValidationError, ValueError)):
        status = 422
    else:
        status = 400
    code = getattr(exc, "code", exc.__class__.__name__)
    return HTTPException(status_code=status, detail={"error": code, "message": str(exc)})


def _node_id(raw: str) -> NodeId:
    try:
        return NodeId(raw)
    except ValueError as exc:
        raise _http_error(UnknownNode(str(exc))) from exc


def create_app(coordinator: Coordinator, ui_dir: Path | None = None) -> FastAPI:
    app = FastAPI(title="gpunion coordinator", docs_url=None, redoc_url=None)
    lock = threading.Lock()
    # exposed so in-process agents (devcluster) can share the guard
    app.state.coordinator_lock = lock

    def guarded(fn, *args, **kwargs):
        with lock:
            try:
                return fn(*args, **kwargs)
            except (GpunionError, ValueError) as exc:
                raise _http_error(exc) from exc

    # -- node lifecycle ---------------------------------------------------

    @app.post("/v1/nodes/register")
    async def register(request: Request) -> dict[str, Any]:
        body = await request.json()
        gpus = [gpu_descriptor_from_wire(g) for g in body.get("gpus", [])]
        prior = body.get("prior_id")
        prior_id = NodeId(prior) if prior else None
        record, token = guarded(
            coordinator.register_node, gpus, float(body.get("latency_ms", 0.0)), prior_id
        )
        return {
            "node_id": record.id.value,
            "token": token,
            "heartbeat_interval_s": coordinator.config.heartbeat_interval_s,
        }

    @app.post("/v1/nodes/{node_id}/heartbeat")
    async def heartbeat(
        node_id: str, request: Request, authorization: str = Header(default="")
    ) -> dict[str, Any]:
        token = authorization.removeprefix("Bearer ").strip()
        body = await request.json()
        telemetry = [telemetry_from_wire(t) for t in body.get("telemetry", [])]
        return guarded(
            coordinator.process_heartbeat,
            _node_id(node_id),
            int(body.get("seq", 0)),
            token,
            telemetry,
            body.get("reports", []),
        )

    @app.post("/v1/nodes/{node_id}/drain")
    def drain(node_id: str, grace_s: float | None = Query(default=None)) -> dict[str, bool]:
        guarded(coordinator.request_drain, _node_id(node_id), grace_s)
        return {"ok": True}

    @app.post("/v1/nodes/{node_id}/pause")
    def pause(node_id: str) -> dict[str, bool]:
        guarded(coordinator.pause_node, _node_id(node_id))
        return {"ok": True}

    @app.post("/v1/nodes/{node_id}/resume")
    def resume(node_id: str) -> dict[str, bool]:
        guarded(coordinator.resume_node, _node_id(node_id))
        return {"ok": True}

    @app.post("/v1/nodes/{node_id}/kill")
    def kill(node_id: str, grace: float = Query(default=0.0)) -> dict[str, bool]:
        # Relay for the dashboard: the kill directive reaches the agent on
        # its next heartbeat; the agent's own kill-switch stays local-first.
        guarded(
            coordinator.queue_directive, _node_id(node_id), {"kind": "kill", "grace_s": grace}
        )
        return {"queued": True}

    @app.post("/v1/nodes/{node_id}/departure")
    async def departure(node_id: str, request: Request) -> dict[str, bool]:
        body = await request.json()
        manifests = [manifest_from_wire(m) for m in body.get("manifests", [])]
        guarded(
            coordinator.handle_departure,
            _node_id(node_id),
            body.get("kind", "graceful"),
            manifests,
        )
        return {"ok": True}

    @app.get("/v1/nodes")
    def list_nodes() -> list[dict]:
        return [node_record_to_wire(n) for n in guarded(coordinator.list_nodes)]

    @app.get("/v1/nodes/{node_id}")
    def get_node(node_id: str) -> dict:
        nid = _node_id(node_id)
        record = guarded(coordinator.node_record, nid)
        out = node_record_to_wire(record)
        out["busy"] = {str(k): v for k, v in guarded(coordinator.node_busy_map, nid).items()}
        return out

    # -- jobs ---------------------------------------------------------------

    @app.post("/v1/jobs")
    async def submit_job(request: Request) -> dict[str, str]:
        body = await request.json()
        try:
            spec = job_spec_from_wire(body)
        except (GpunionError, KeyError, TypeError, ValueError) as exc:
            raise _http_error(ValidationError(f"bad job spec: {exc}")) from exc
        job_id = guarded(coordinator.enqueue_job, spec)
        guarded(coordinator.schedule_tick, coordinator.clock.now_ms())
        return {"job_id": job_id}

    @app.get("/v1/jobs")
    def list_jobs() -> list[dict]:
        return [job_record_to_wire(j) for j in guarded(coordinator.list_jobs)]

    @app.get("/v1/jobs/{job_id}")
    def get_job(job_id: str) -> dict:
        return job_record_to_wire(guarded(coordinator.get_job, job_id))

    @app.get("/v1/jobs/{job_id}/checkpoints")
    def job_checkpoints(job_id: str) -> dict:
        guarded(coordinator.get_job, job_id)
        tail = guarded(coordinator.job_checkpoint_tail, job_id)
        return {"tail": manifest_to_wire(tail) if tail else None}

    @app.delete("/v1/jobs/{job_id}")
    def cancel_job(job_id: str) -> dict[str, bool]:
        guarded(coordinator.cancel_job, job_id)
        return {"cancelled": True}

    # -- observability --------------------------------------------------------

    @app.get("/v1/cluster/summary")
    def summary() -> dict:
        return guarded(coordinator.cluster_summary)

    @app.get("/v1/events")
    def events(since_seq: int = Query(default=0), limit: int = Query(default=500)) -> list[dict]:
        return [entry_to_wire(e) for e in guarded(coordinator.recent_events, since_seq, limit)]

    @app.get("/metrics", response_class=PlainTextResponse)
    def metrics() -> str:
        return guarded(coordinator.render_metrics)

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
