"""Canonical JSON wire encoding for domain types.

Objects use snake_case field names matching the dataclass fields; enums are
encoded as tagged objects ``{"kind": "..."}``. Every encoder has a matching
decoder and the pair round-trips to an equal value.
"""

from __future__ import annotations

import json
from typing import Any

from gpunion.domain.ids import NodeId
from gpunion.domain.types import (
    Allocation,
    CheckpointManifest,
    CheckpointMode,
    GpuDescriptor,
    GpuTelemetry,
    InterruptionEvent,
    InterruptionKind,
    JobMode,
    JobRecord,
    JobSpec,
    JobState,
    NodeRecord,
    NodeState,
    StorageKind,
    StorageTarget,
)

Wire = dict[str, Any]


def enum_to_wire(value: Any) -> Wire:
    return {"kind": value.value}


def enum_from_wire(enum_cls: type, obj: Wire) -> Any:
    return enum_cls(obj["kind"])


def gpu_descriptor_to_wire(g: GpuDescriptor) -> Wire:
    return {
        "index": g.index,
        "model": g.model,
        "memory_mib": g.memory_mib,
        "compute_capability": list(g.compute_capability),
    }


def gpu_descriptor_from_wire(obj: Wire) -> GpuDescriptor:
    return GpuDescriptor(
        index=obj["index"],
        model=obj["model"],
        memory_mib=obj["memory_mib"],
        compute_capability=tuple(obj["compute_capability"]),
    )


def storage_target_to_wire(t: StorageTarget) -> Wire:
    out: Wire = {"kind": t.kind.value, "path": t.path}
    if t.node_id is not None:
        out["node_id"] = t.node_id.value
    return out


def storage_target_from_wire(obj: Wire) -> StorageTarget:
    kind = StorageKind(obj["kind"])
    node_id = NodeId(obj["node_id"]) if obj.get("node_id") else None
    return StorageTarget(kind=kind, path=obj["path"], node_id=node_id)


def telemetry_to_wire(t: GpuTelemetry) -> Wire:
    return {
        "node": t.node.value,
        "gpu_index": t.gpu_index,
        "util_pct": t.util_pct,
        "mem_used_mib": t.mem_used_mib,
        "temp_c": t.temp_c,
        "power_w": t.power_w,
        "sampled_at": t.sampled_at,
    }


def telemetry_from_wire(obj: Wire) -> GpuTelemetry:
    return GpuTelemetry(
        node=NodeId(obj["node"]),
        gpu_index=obj["gpu_index"],
        util_pct=obj["util_pct"],
        mem_used_mib=obj["mem_used_mib"],
        temp_c=obj["temp_c"],
        power_w=obj["power_w"],
        sampled_at=obj["sampled_at"],
    )


def node_record_to_wire(n: NodeRecord) -> Wire:
    return {
        "id": n.id.value,
        "gpus": [gpu_descriptor_to_wire(g) for g in n.gpus],
        "state": enum_to_wire(n.state),
        "latency_ms": n.latency_ms,
        "volatility_score": n.volatility_score,
        "last_heartbeat_seq": n.last_heartbeat_seq,
        "missed_heartbeats": n.missed_heartbeats,
        "auth_token_hash": n.auth_token_hash,
    }


def node_record_from_wire(obj: Wire) -> NodeRecord:
    return NodeRecord(
        id=NodeId(obj["id"]),
        gpus=[gpu_descriptor_from_wire(g) for g in obj["gpus"]],
        state=enum_from_wire(NodeState, obj["state"]),
        latency_ms=obj["latency_ms"],
        volatility_score=obj["volatility_score"],
        last_heartbeat_seq=obj["last_heartbeat_seq"],
        missed_heartbeats=obj["missed_heartbeats"],
        auth_token_hash=obj["auth_token_hash"],
    )


def job_spec_to_wire(s: JobSpec) -> Wire:
    return {
        "image_ref": s.image_ref,
        "image_digest": s.image_digest,
        "mode": enum_to_wire(s.mode),
        "entrypoint": list(s.entrypoint),
        "gpu_memory_mib_required": s.gpu_memory_mib_required,
        "min_compute_capability": list(s.min_compute_capability),
        "priority": s.priority,
        "checkpoint_interval_s": s.checkpoint_interval_s,
        "checkpoint_mode": enum_to_wire(s.checkpoint_mode),
        "storage_target": storage_target_to_wire(s.storage_target),
        "estimated_duration_s": s.estimated_duration_s,
        "affinity_window_s": s.affinity_window_s,
    }


def job_spec_from_wire(obj: Wire) -> JobSpec:
    return JobSpec(
        image_ref=obj["image_ref"],
        image_digest=obj["image_digest"],
        mode=enum_from_wire(JobMode, obj["mode"]),
        entrypoint=tuple(obj["entrypoint"]),
        gpu_memory_mib_required=obj["gpu_memory_mib_required"],
        min_compute_capability=tuple(obj["min_compute_capability"]),
        priority=obj["priority"],
        checkpoint_interval_s=obj["checkpoint_interval_s"],
        checkpoint_mode=enum_from_wire(CheckpointMode, obj["checkpoint_mode"]),
        storage_target=storage_target_from_wire(obj["storage_target"]),
        estimated_duration_s=obj["estimated_duration_s"],
        affinity_window_s=obj["affinity_window_s"],
    )


def allocation_to_wire(a: Allocation) -> Wire:
    return {
        "job_id": a.job_id,
        "node_id": a.node_id.value,
        "gpu_indices": list(a.gpu_indices),
        "granted_at": a.granted_at,
    }


def allocation_from_wire(obj: Wire) -> Allocation:
    return Allocation(
        job_id=obj["job_id"],
        node_id=NodeId(obj["node_id"]),
        gpu_indices=tuple(obj["gpu_indices"]),
        granted_at=obj["granted_at"],
    )


def manifest_to_wire(m: CheckpointManifest) -> Wire:
    return {
        "job_id": m.job_id,
        "seq": m.seq,
        "parent_seq": m.parent_seq,
        "created_at": m.created_at,
        "payload_bytes": m.payload_bytes,
        "content_hash": m.content_hash,
        "target": storage_target_to_wire(m.target),
    }


def manifest_from_wire(obj: Wire) -> CheckpointManifest:
    return CheckpointManifest(
        job_id=obj["job_id"],
        seq=obj["seq"],
        parent_seq=obj["parent_seq"],
        created_at=obj["created_at"],
        payload_bytes=obj["payload_bytes"],
        content_hash=obj["content_hash"],
        target=storage_target_from_wire(obj["target"]),
    )


def interruption_to_wire(e: InterruptionEvent) -> Wire:
    out: Wire = {"kind": e.kind.value, "node": e.node.value, "at": e.at}
    if e.duration_s is not None:
        out["duration_s"] = e.duration_s
    return out


def interruption_from_wire(obj: Wire) -> InterruptionEvent:
    return InterruptionEvent(
        kind=InterruptionKind(obj["kind"]),
        node=NodeId(obj["node"]),
        at=obj["at"],
        duration_s=obj.get("duration_s"),
    )


def job_record_to_wire(r: JobRecord) -> Wire:
    return {
        "job_id": r.job_id,
        "spec": job_spec_to_wire(r.spec),
        "state": enum_to_wire(r.state),
        "enqueue_seq": r.enqueue_seq,
        "allocations": [allocation_to_wire(a) for a in r.allocations],
        "affinity_node": r.affinity_node.value if r.affinity_node else None,
        "affinity_expires_at": r.affinity_expires_at,
    }


def job_record_from_wire(obj: Wire) -> JobRecord:
    return JobRecord(
        job_id=obj["job_id"],
        spec=job_spec_from_wire(obj["spec"]),
        state=enum_from_wire(JobState, obj["state"]),
        enqueue_seq=obj["enqueue_seq"],
        allocations=[allocation_from_wire(a) for a in obj["allocations"]],
        affinity_node=NodeId(obj["affinity_node"]) if obj.get("affinity_node") else None,
        affinity_expires_at=obj.get("affinity_expires_at"),
    )


def canonical_json(obj: Any) -> str:
    """Stable rendering used for hashing and golden files."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))
