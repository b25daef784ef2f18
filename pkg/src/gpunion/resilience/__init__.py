from gpunion.resilience.checkpoints import (
    CheckpointPolicy,
    RestoreResult,
    WorkloadStateModel,
    create_checkpoint,
    estimate_restore_downtime_ms,
    lost_work_ms,
    payload_size_bytes,
    restore_latest,
)
from gpunion.resilience.migration import MigrationPlan, plan_migration
from gpunion.resilience.store import (
    BandwidthLedger,
    CheckpointStore,
    FileStorage,
    MemoryStorage,
    Transfer,
)

__all__ = [
    "BandwidthLedger",
    "CheckpointPolicy",
    "CheckpointStore",
    "FileStorage",
    "MemoryStorage",
    "MigrationPlan",
    "RestoreResult",
    "Transfer",
    "WorkloadStateModel",
    "create_checkpoint",
    "estimate_restore_downtime_ms",
    "lost_work_ms",
    "payload_size_bytes",
    "plan_migration",
    "restore_latest",
]
