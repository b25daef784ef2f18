"""Append-only event log: payload types, wire codec, and the file-backed store.

The log is the coordinator's source of truth: replaying it from empty state
reconstructs the live state field-for-field. Sequence numbers are gapless.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable

from gpunion.domain.ids import NodeId
from gpunion.domain.types import (
    Allocation,
    CheckpointManifest,
    GpuDescriptor,
    GpuTelemetry,
    JobSpec,
    JobState,
    NodeState,
)
from gpunion.domain.wire import (
    allocation_from_wire,
    allocation_to_wire,
    canonical_json,
    gpu_descriptor_from_wire,
    gpu_descriptor_to_wire,
    job_spec_from_wire,
    job_spec_to_wire,
    manifest_from_wire,
    manifest_to_wire,
    telemetry_from_wire,
    telemetry_to_wire,
)
from gpunion.errors import CorruptEntry, GapInLog


@dataclass(frozen=True)
class NodeRegistered:
    node_id: NodeId
    gpus: tuple[GpuDescriptor, ...]
    latency_ms: float
    token_hash: str
    rejoined: bool


@dataclass(frozen=True)
class NodeStateChanged:
    node_id: NodeId
    state: NodeState
    reason: str


@dataclass(frozen=True)
class HeartbeatAccepted:
    node_id: NodeId
    seq: int
    telemetry: tuple[GpuTelemetry, ...]


@dataclass(frozen=True)
class HeartbeatMissed:
    node_id: NodeId
    missed: int


@dataclass(frozen=True)
class JobEnqueued:
    job_id: str
    spec: JobSpec
    enqueue_seq: int


@dataclass(frozen=True)
class JobStateChanged:
    job_id: str
    state: JobState
    reason: str


@dataclass(frozen=True)
class AllocationGranted:
    allocation: Allocation


@dataclass(frozen=True)
class AllocationReleased:
    job_id: str
    node_id: NodeId


@dataclass(frozen=True)
class CheckpointRecorded:
    manifest: CheckpointManifest


@dataclass(frozen=True)
class MigrationStarted:
    job_id: str
    from_node: NodeId
    reason: str


@dataclass(frozen=True)
class MigrationCompleted:
    job_id: str
    to_node: NodeId


@dataclass(frozen=True)
class AffinitySet:
    job_id: str
    node_id: NodeId
    expires_at: int


@dataclass(frozen=True)
class InterruptionRecorded:
    node_id: NodeId
    reason: str


@dataclass(frozen=True)
class DayRolled:
    node_id: NodeId


@dataclass(frozen=True)
class JobCancelled:
    job_id: str


@dataclass(frozen=True)
class DirectiveQueued:
    node_id: NodeId
    directive: dict


EventPayload = (
    NodeRegistered
    | NodeStateChanged
    | HeartbeatAccepted
    | HeartbeatMissed
    | JobEnqueued
    | JobStateChanged
    | AllocationGranted
    | AllocationReleased
    | CheckpointRecorded
    | MigrationStarted
    | MigrationCompleted
    | AffinitySet
    | InterruptionRecorded
    | DayRolled
    | JobCancelled
    | DirectiveQueued
)


@dataclass(frozen=True)
class EventLogEntry:
    seq: int
    at: int
    payload: EventPayload


def payload_to_wire(p: EventPayload) -> dict[str, Any]:
    if isinstance(p, NodeRegistered):
        return {
            "kind": "node_registered",
            "node_id": p.node_id.value,
            "gpus": [gpu_descriptor_to_wire(g) for g in p.gpus],
            "latency_ms": p.latency_ms,
            "token_hash": p.token_hash,
            "rejoined": p.rejoined,
        }
    if isinstance(p, NodeStateChanged):
        return {"kind": "node_state_changed", "node_id": p.node_id.value, "state": p.state.value, "reason": p.reason}
    if isinstance(p, HeartbeatAccepted):
        return {
            "kind": "heartbeat_accepted",
            "node_id": p.node_id.value,
            "seq": p.seq,
            "telemetry": [telemetry_to_wire(t) for t in p.telemetry],
        }
    if isinstance(p, HeartbeatMissed):
        return {"kind": "heartbeat_missed", "node_id": p.node_id.value, "missed": p.missed}
    if isinstance(p, JobEnqueued):
        return {"kind": "job_enqueued", "job_id": p.job_id, "spec": job_spec_to_wire(p.spec), "enqueue_seq": p.enqueue_seq}
    if isinstance(p, JobStateChanged):
        return {"kind": "job_state_changed", "job_id": p.job_id, "state": p.state.value, "reason": p.reason}
    if isinstance(p, AllocationGranted):
        return {"kind": "allocation_granted", "allocation": allocation_to_wire(p.allocation)}
    if isinstance(p, AllocationReleased):
        return {"kind": "allocation_released", "job_id": p.job_id, "node_id": p.node_id.value}
    if isinstance(p, CheckpointRecorded):
        return {"kind": "checkpoint_recorded", "manifest": manifest_to_wire(p.manifest)}
    if isinstance(p, MigrationStarted):
        return {"kind": "migration_started", "job_id": p.job_id, "from_node": p.from_node.value, "reason": p.reason}
    if isinstance(p, MigrationCompleted):
        return {"kind": "migration_completed", "job_id": p.job_id, "to_node": p.to_node.value}
    if isinstance(p, AffinitySet):
        return {"kind": "affinity_set", "job_id": p.job_id, "node_id": p.node_id.value, "expires_at": p.expires_at}
    if isinstance(p, InterruptionRecorded):
        return {"kind": "interruption_recorded", "node_id": p.node_id.value, "reason": p.reason}
    if isinstance(p, DayRolled):
        return {"kind": "day_rolled", "node_id": p.node_id.value}
    if isinstance(p, JobCancelled):
        return {"kind": "job_cancelled", "job_id": p.job_id}
    if isinstance(p, DirectiveQueued):
        return {"kind": "directive_queued", "node_id": p.node_id.value, "directive": p.directive}
    raise TypeError(f"unknown payload type: {type(p)!r}")


def payload_from_wire(obj: dict[str, Any]) -> EventPayload:
    kind = obj["kind"]
    if kind == "node_registered":
        return NodeRegistered(
            node_id=NodeId(obj["node_id"]),
            gpus=tuple(gpu_descriptor_from_wire(g) for g in obj["gpus"]),
            latency_ms=obj["latency_ms"],
            token_hash=obj["token_hash"],
            rejoined=obj["rejoined"],
        )
    if kind == "node_state_changed":
        return NodeStateChanged(NodeId(obj["node_id"]), NodeState(obj["state"]), obj["reason"])
    if kind == "heartbeat_accepted":
        return HeartbeatAccepted(
            NodeId(obj["node_id"]), obj["seq"], tuple(telemetry_from_wire(t) for t in obj["telemetry"])
        )
    if kind == "heartbeat_missed":
        return HeartbeatMissed(NodeId(obj["node_id"]), obj["missed"])
    if kind == "job_enqueued":
        return JobEnqueued(obj["job_id"], job_spec_from_wire(obj["spec"]), obj["enqueue_seq"])
    if kind == "job_state_changed":
        return JobStateChanged(obj["job_id"], JobState(obj["state"]), obj["reason"])
    if kind == "allocation_granted":
        return AllocationGranted(allocation_from_wire(obj["allocation"]))
    if kind == "allocation_released":
        return AllocationReleased(obj["job_id"], NodeId(obj["node_id"]))
    if kind == "checkpoint_recorded":
        return CheckpointRecorded(manifest_from_wire(obj["manifest"]))
    if kind == "migration_started":
        return MigrationStarted(obj["job_id"], NodeId(obj["from_node"]), obj["reason"])
    if kind == "migration_completed":
        return MigrationCompleted(obj["job_id"], NodeId(obj["to_node"]))
    if kind == "affinity_set":
        return AffinitySet(obj["job_id"], NodeId(obj["node_id"]), obj["expires_at"])
    if kind == "interruption_recorded":
        return InterruptionRecorded(NodeId(obj["node_id"]), obj["reason"])
    if kind == "day_rolled":
        return DayRolled(NodeId(obj["node_id"]))
    if kind == "job_cancelled":
        return JobCancelled(obj["job_id"])
    if kind == "directive_queued":
        return DirectiveQueued(NodeId(obj["node_id"]), obj["directive"])
    raise CorruptEntry(f"unknown event kind: {kind!r}")


def entry_to_wire(e: EventLogEntry) -> dict[str, Any]:
    return {"seq": e.seq, "at": e.at, "payload": payload_to_wire(e.payload)}


def entry_from_wire(obj: dict[str, Any]) -> EventLogEntry:
    try:
        return EventLogEntry(seq=obj["seq"], at=obj["at"], payload=payload_from_wire(obj["payload"]))
    except CorruptEntry:
        raise
    except Exception as exc:
        raise CorruptEntry(str(exc)) from exc


def check_gapless(entries: Iterable[EventLogEntry]) -> None:
    for i, e in enumerate(entries):
        if e.seq != i:
            raise GapInLog(f"expected seq {i}, found {e.seq}")


class FileEventLog:
    """JSONL append-only persistence for the event log."""

    def __init__(self, path: str | Path) -> None:
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)

    def append(self, entry: EventLogEntry) -> None:
        with self.path.open("a") as fh:
            fh.write(canonical_json(entry_to_wire(entry)) + "\n")

    def read_all(self) -> list[EventLogEntry]:
        if not self.path.exists():
            return []
        entries = []
        for line in self.path.read_text().splitlines():
            if not line.strip():
                continue
            try:
                entries.append(entry_from_wire(json.loads(line)))
            except json.JSONDecodeError as exc:
                raise CorruptEntry(str(exc)) from exc
        check_gapless(entries)
        return entries
