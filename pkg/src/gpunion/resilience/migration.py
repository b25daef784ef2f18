"""Migration planning for displaced jobs."""

from __future__ import annotations

from dataclasses import dataclass

from gpunion.coordinator.scheduling import CandidateNode, choose_node, filter_candidates
from gpunion.domain.ids import NodeId
from gpunion.domain.types import CheckpointManifest, JobRecord, NodeState
from gpunion.resilience.checkpoints import (
    DEFAULT_RESTORE_OVERHEAD_S,
    estimate_restore_downtime_ms,
)


@dataclass(frozen=True)
class MigrationPlan:
    job_id: str
    target_node: NodeId | None  # None => stays pending, retried each tick
    manifests: tuple[CheckpointManifest, ...]
    estimated_downtime_ms: int
    reason: str


def plan_migration(
    job: JobRecord,
    reason: str,
    cluster: list[CandidateNode],
    restore_manifests: tuple[CheckpointManifest, ...],
    weight_volatility: float,
    weight_latency: float,
    cursor: int,
    link_bandwidth_mbps: float,
    now_ms: int,
    restore_overhead_s: float = DEFAULT_RESTORE_OVERHEAD_S,
    launch_overhead_ms: int = 0,
) -> MigrationPlan:
    """Pick a landing node for a displaced job using the scheduler's own policy.

    A live origin node with an unexpired affinity tag wins outright when it
    passes the constraint filter; otherwise the normal score/tie-break path
    runs over the snapshot. With no eligible node the job stays pending.
    """
    target: NodeId | None = None
    if job.affinity_active(now_ms):
        origin = [n for n in cluster if n.node_id == job.affinity_node and n.state is NodeState.ACTIVE]
        if origin and filter_candidates(job.spec, origin):
            target = job.affinity_node
    if target is None:
        all_sorted = sorted(n.node_id for n in cluster)
        target = choose_node(
            job.spec, cluster, weight_volatility, weight_latency, all_sorted, cursor
        )
    transfer_bytes = sum(m.payload_bytes for m in restore_manifests)
    downtime = (
        estimate_restore_downtime_ms(transfer_bytes, link_bandwidth_mbps, restore_overhead_s)
        + launch_overhead_ms
        if target is not None
        else 0
    )
    return MigrationPlan(
        job_id=job.job_id,
        target_node=target,
        manifests=restore_manifests,
        estimated_downtime_ms=downtime,
        reason=reason,
    )
