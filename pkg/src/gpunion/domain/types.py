"""Shared domain value types.

All types here are plain values: safe to copy between threads, compared by
field equality, and serialized through :mod:`gpunion.domain.wire`. Timestamps
are integer milliseconds from an injectable clock.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum

from gpunion.domain.ids import NodeId

_SHA256_RE = re.compile(r"^[0-9a-f]{64}$")


class NodeState(Enum):
    REGISTERING = "registering"
    ACTIVE = "active"
    PAUSED = "paused"
    DRAINING = "draining"
    UNAVAILABLE = "unavailable"
    DEPARTED = "departed"


class JobState(Enum):
    PENDING = "pending"
    SCHEDULED = "scheduled"
    RUNNING = "running"
    CHECKPOINTING = "checkpointing"
    MIGRATING = "migrating"
    COMPLETED = "completed"
    FAILED = "failed"
    LOST = "lost"


class JobMode(Enum):
    INTERACTIVE = "interactive"
    BATCH = "batch"


class CheckpointMode(Enum):
    FULL = "full"
    INCREMENTAL = "incremental"


class InterruptionKind(Enum):
    SCHEDULED_DEPARTURE = "scheduled_departure"
    EMERGENCY_DEPARTURE = "emergency_departure"
    TEMPORARY_UNAVAILABILITY = "temporary_unavailability"


class StorageKind(Enum):
    SHARED_FS = "shared_fs"
    NODE = "node"
    LOCAL = "local"


@dataclass(frozen=True)
class GpuDescriptor:
    """One physical GPU on a provider node."""

    index: int
    model: str
    memory_mib: int
    compute_capability: tuple[int, int]

    def __post_init__(self) -> None:
        if self.memory_mib <= 0:
            raise ValueError("memory_mib must be positive")
        if self.compute_capability[0] < 1:
            raise ValueError("compute capability major must be >= 1")


def capability_at_least(have: tuple[int, int], need: tuple[int, int]) -> bool:
    """Total order on compute capability: (a,b) >= (c,d) iff a>c or (a=c and b>=d)."""
    return have[0] > need[0] or (have[0] == need[0] and have[1] >= need[1])


@dataclass(frozen=True)
class StorageTarget:
    """Where a job's checkpoints live: shared FS, a specific node, or local disk."""

    kind: StorageKind
    path: str
    node_id: NodeId | None = None

    def __post_init__(self) -> None:
        if not self.path:
            raise ValueError("storage path must be nonempty")
        if self.kind is StorageKind.NODE and self.node_id is None:
            raise ValueError("node storage target requires a node id")
        if self.kind is not StorageKind.NODE and self.node_id is not None:
            raise ValueError("node_id only valid for node storage targets")

    @classmethod
    def shared_fs(cls, path: str) -> "StorageTarget":
        return cls(StorageKind.SHARED_FS, path)

    @classmethod
    def node(cls, node_id: NodeId, path: str) -> "StorageTarget":
        return cls(StorageKind.NODE, path, node_id)

    @classmethod
    def local(cls, path: str) -> "StorageTarget":
        return cls(StorageKind.LOCAL, path)


@dataclass(frozen=True)
class GpuTelemetry:
    node: NodeId
    gpu_index: int
    util_pct: float
    mem_used_mib: int
    temp_c: int
    power_w: float
    sampled_at: int

    def __post_init__(self) -> None:
        if not 0.0 <= self.util_pct <= 100.0:
            raise ValueError("util_pct must be within [0, 100]")
        if self.mem_used_mib < 0:
            raise ValueError("mem_used_mib must be nonnegative")
        if self.power_w < 0:
            raise ValueError("power_w must be nonnegative")


@dataclass
class NodeRecord:
    """Coordinator-side view of a provider node."""

    id: NodeId
    gpus: list[GpuDescriptor]
    state: NodeState
    latency_ms: float
    volatility_score: float
    last_heartbeat_seq: int
    missed_heartbeats: int
    auth_token_hash: str

    def __post_init__(self) -> None:
        if not 0 <= self.missed_heartbeats <= 3:
            raise ValueError("missed_heartbeats must be within [0, 3]")
        if self.state is NodeState.UNAVAILABLE and self.missed_heartbeats != 3:
            raise ValueError("unavailable nodes must have missed_heartbeats == 3")
        if self.volatility_score < 0:
            raise ValueError("volatility_score must be nonnegative")


@dataclass(frozen=True)
class JobSpec:
    """User-submitted workload description."""

    image_ref: str
    image_digest: str
    mode: JobMode
    entrypoint: tuple[str, ...]
    gpu_memory_mib_required: int
    min_compute_capability: tuple[int, int]
    priority: int
    checkpoint_interval_s: float
    checkpoint_mode: CheckpointMode
    storage_target: StorageTarget
    estimated_duration_s: float
    affinity_window_s: float


@dataclass(frozen=True)
class Allocation:
    """Binding of a job to specific GPU indices on one node."""

    job_id: str
    node_id: NodeId
    gpu_indices: tuple[int, ...]
    granted_at: int


@dataclass(frozen=True)
class CheckpointManifest:
    """Metadata for one checkpoint in a job's hash-chained series.

    ``parent_seq`` is absent exactly when the checkpoint is a full capture;
    an incremental manifest's parent chain must terminate at a full one.
    """

    job_id: str
    seq: int
    parent_seq: int | None
    created_at: int
    payload_bytes: int
    content_hash: str
    target: StorageTarget

    def __post_init__(self) -> None:
        if self.seq < 0:
            raise ValueError("seq must be >= 0")
        if self.parent_seq is not None and self.parent_seq >= self.seq:
            raise ValueError("parent_seq must precede seq")
        if not _SHA256_RE.match(self.content_hash):
            raise ValueError("content_hash must be 64 lowercase hex chars")

    @property
    def is_full(self) -> bool:
        return self.parent_seq is None


@dataclass(frozen=True)
class InterruptionEvent:
    """Simulated provider behavior at a point in simulated time."""

    kind: InterruptionKind
    node: NodeId
    at: int
    duration_s: float | None = None

    def __post_init__(self) -> None:
        if self.kind is InterruptionKind.TEMPORARY_UNAVAILABILITY:
            if self.duration_s is None or self.duration_s <= 0:
                raise ValueError("temporary unavailability requires duration_s > 0")
        elif self.duration_s is not None:
            raise ValueError("duration_s only valid for temporary unavailability")


@dataclass
class JobRecord:
    """Coordinator-side job bookkeeping: spec, lifecycle state, history."""

    job_id: str
    spec: JobSpec
    state: JobState
    enqueue_seq: int
    allocations: list[Allocation] = field(default_factory=list)
    affinity_node: NodeId | None = None
    affinity_expires_at: int | None = None

    @property
    def current_allocation(self) -> Allocation | None:
        return self.allocations[-1] if self.allocations else None

    def affinity_active(self, now: int) -> bool:
        return (
            self.affinity_node is not None
            and self.affinity_expires_at is not None
            and now < self.affinity_expires_at
        )
