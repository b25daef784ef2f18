"""Localhost-only control endpoint for the provider agent.

Mirrors the CLI verbs so the dashboard (via coordinator relay) or any local
tool can steer the agent. Kill returns only after local termination has
completed; none of these paths depend on coordinator reachability.
"""

from __future__ import annotations

import threading

from fastapi import FastAPI, HTTPException, Query

from gpunion.agent.core import Agent
from gpunion.errors import GpunionError


def create_local_app(agent: Agent) -> FastAPI:
    app = FastAPI(title="gpunion agent", docs_url=None, redoc_url=None)
    lock = threading.Lock()

    def guarded(fn, *args, **kwargs):
        with lock:
            try:
                return fn(*args, **kwargs)
            except GpunionError as exc:
                code = getattr(exc, "code", exc.__class__.__name__)
                raise HTTPException(
                    status_code=409, detail={"error": code, "message": str(exc)}
                ) from exc

    @app.post("/local/kill")
    def kill(grace: float = Query(default=0.0)) -> dict:
        report = guarded(agent.kill_switch, grace)
        return {
            "started_at": report.started_at,
            "completed_at": report.completed_at,
            "events": [
                {"at": at, "job_id": job_id, "kind": kind} for at, job_id, kind in report.events
            ],
            "notified": report.notified,
        }

    @app.post("/local/drain")
    def drain(grace: float | None = Query(default=None)) -> dict:
        report = guarded(agent.drain, grace)
        return {"completed_at": report.completed_at, "notified": report.notified}

    @app.post("/local/pause")
    def pause() -> dict:
        guarded(agent.pause)
        return {"ok": True}

    @app.post("/local/resume")
    def resume() -> dict:
        guarded(agent.resume)
        return {"ok": True}

    @app.get("/local/status")
    def status() -> dict:
        return {
            "node_id": agent.node_id.value if agent.node_id else None,
            "alive": agent.alive,
            "workloads": sorted(agent.workloads),
        }

    return app
