"""Coordinator transports: in-process (simulator, tests) and HTTP (live).

The agent only ever initiates connections; coordinator directives ride on
heartbeat acknowledgments, so providers need no inbound listener.
"""

from __future__ import annotations

from typing import Any, Protocol, Sequence

import httpx

from gpunion.domain.ids import NodeId
from gpunion.domain.types import CheckpointManifest, GpuDescriptor, GpuTelemetry
from gpunion.domain.wire import (
    gpu_descriptor_to_wire,
    manifest_to_wire,
    telemetry_to_wire,
)
from gpunion.errors import (
    CoordinatorUnreachable,
    IllegalTransition,
    RegistrationRejected,
    StaleSequence,
    Unauthorized,
    UnknownNode,
)


class Transport(Protocol):
    def register(
        self, gpus: Sequence[GpuDescriptor], latency_ms: float, prior_id: NodeId | None
    ) -> dict[str, str]: ...

    def heartbeat(
        self,
        node_id: NodeId,
        seq: int,
        token: str,
        telemetry: Sequence[GpuTelemetry],
        reports: Sequence[dict],
    ) -> dict[str, Any]: ...

    def departure(
        self,
        node_id: NodeId,
        kind: str,
        manifests: Sequence[CheckpointManifest],
        timeout_s: float = 2.0,
    ) -> None: ...

    def pause(self, node_id: NodeId) -> None: ...

    def resume(self, node_id: NodeId) -> None: ...


class InProcTransport:
    """Direct calls into a Coordinator instance."""

    def __init__(self, coordinator) -> None:
        self.coordinator = coordinator

    def register(self, gpus, latency_ms, prior_id=None) -> dict[str, str]:
        record, token = self.coordinator.register_node(list(gpus), latency_ms, prior_id)
        return {
            "node_id": record.id.value,
            "token": token,
            "heartbeat_interval_s": self.coordinator.config.heartbeat_interval_s,
        }

    def heartbeat(self, node_id, seq, token, telemetry=(), reports=()) -> dict[str, Any]:
        return self.coordinator.process_heartbeat(
            node_id, seq, token, list(telemetry), list(reports)
        )

    def departure(self, node_id, kind, manifests=(), timeout_s: float = 2.0) -> None:
        self.coordinator.handle_departure(node_id, kind, list(manifests))

    def pause(self, node_id) -> None:
        self.coordinator.pause_node(node_id)

    def resume(self, node_id) -> None:
        self.coordinator.resume_node(node_id)


class BlackholeTransport:
    """Coordinator unreachable; every call fails. Kill-switch must still work."""

    def register(self, gpus, latency_ms, prior_id=None):
        raise CoordinatorUnreachable("blackholed")

    def heartbeat(self, node_id, seq, token, telemetry=(), reports=()):
        raise CoordinatorUnreachable("blackholed")

    def departure(self, node_id, kind, manifests=(), timeout_s: float = 2.0):
        raise CoordinatorUnreachable("blackholed")

    def pause(self, node_id):
        raise CoordinatorUnreachable("blackholed")

    def resume(self, node_id):
        raise CoordinatorUnreachable("blackholed")


class HttpTransport:
    def __init__(self, base_url: str, timeout_s: float = 10.0) -> None:
        self.base_url = base_url.rstrip("/")
        self._client = httpx.Client(base_url=self.base_url, timeout=timeout_s)

    def register(self, gpus, latency_ms, prior_id=None) -> dict[str, str]:
        body = {
            "gpus": [gpu_descriptor_to_wire(g) for g in gpus],
            "latency_ms": latency_ms,
            "prior_id": prior_id.value if prior_id else None,
        }
        try:
            resp = self._client.post("/v1/nodes/register", json=body)
        except httpx.HTTPError as exc:
            raise CoordinatorUnreachable(str(exc)) from exc
        if resp.status_code != 200:
            raise RegistrationRejected(resp.text)
        return resp.json()

    def heartbeat(self, node_id, seq, token, telemetry=(), reports=()) -> dict[str, Any]:
        body = {
            "seq": seq,
            "telemetry": [telemetry_to_wire(t) for t in telemetry],
            "reports": list(reports),
        }
        try:
            resp = self._client.post(
                f"/v1/nodes/{node_id.value}/heartbeat",
                json=body,
                headers={"Authorization": f"Bearer {token}"},
            )
        except httpx.HTTPError as exc:
            raise CoordinatorUnreachable(str(exc)) from exc
        if resp.status_code == 401:
            raise Unauthorized(resp.text)
        if resp.status_code == 404:
            raise UnknownNode(resp.text)
        if resp.status_code == 409:
            raise StaleSequence(resp.text)
        resp.raise_for_status()
        return resp.json()

    def departure(self, node_id, kind, manifests=(), timeout_s: float = 2.0) -> None:
        body = {"kind": kind, "manifests": [manifest_to_wire(m) for m in manifests]}
        try:
            self._client.post(
                f"/v1/nodes/{node_id.value}/departure", json=body, timeout=timeout_s
            )
        except httpx.HTTPError as exc:
            raise CoordinatorUnreachable(str(exc)) from exc

    def pause(self, node_id) -> None:
        self._node_action(node_id, "pause")

    def resume(self, node_id) -> None:
        self._node_action(node_id, "resume")

    def _node_action(self, node_id, action: str) -> None:
        try:
            resp = self._client.post(f"/v1/nodes/{node_id.value}/{action}")
        except httpx.HTTPError as exc:
            raise CoordinatorUnreachable(str(exc)) from exc
        if resp.status_code == 404:
            raise UnknownNode(resp.text)
        if resp.status_code == 409:
            raise IllegalTransition(resp.text)
        if resp.status_code >= 400:
            raise CoordinatorUnreachable(resp.text)
