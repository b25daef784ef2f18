from gpunion.domain.ids import NodeId, new_job_id
from gpunion.domain.state import (
    JOB_TRANSITIONS,
    NODE_TRANSITIONS,
    JobEvent,
    NodeEvent,
    transition,
)
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
    capability_at_least,
)
from gpunion.domain.validate import validate_job_spec

__all__ = [
    "Allocation",
    "CheckpointManifest",
    "CheckpointMode",
    "GpuDescriptor",
    "GpuTelemetry",
    "InterruptionEvent",
    "InterruptionKind",
    "JobEvent",
    "JobMode",
    "JobRecord",
    "JobSpec",
    "JobState",
    "JOB_TRANSITIONS",
    "NodeEvent",
    "NodeId",
    "NodeRecord",
    "NodeState",
    "NODE_TRANSITIONS",
    "StorageKind",
    "StorageTarget",
    "capability_at_least",
    "new_job_id",
    "transition",
    "validate_job_spec",
]
