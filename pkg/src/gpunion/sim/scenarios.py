"""Shipped scenario configurations.

Each builder returns a SimConfig calibrated so that a closed-form oracle
exists for the quantity under study; the acceptance suite compares the
simulator's output against those oracles rather than against constants
pulled out of thin air.
"""

from __future__ import annotations

import hashlib
import random

from gpunion.domain.types import CheckpointMode, JobMode, JobSpec, StorageTarget
from gpunion.sim.config import SimConfig, SimNodeConfig, SimWorkloadConfig

GIB = 2**30


def _digest(tag: str) -> str:
    return hashlib.sha256(f"gpunion-scenario:{tag}".encode()).hexdigest()


def _spec(
    tag: str,
    checkpoint_interval_s: float,
    mode: CheckpointMode,
    duration_s: float,
    gpu_memory_mib: int = 8000,
    affinity_window_s: float = 1800.0,
    priority: int = 5,
) -> JobSpec:
    return JobSpec(
        image_ref=f"registry.campus/{tag}:1",
        image_digest=_digest(tag),
        mode=JobMode.BATCH,
        entrypoint=("python", "train.py"),
        gpu_memory_mib_required=gpu_memory_mib,
        min_compute_capability=(7, 0),
        priority=priority,
        checkpoint_interval_s=checkpoint_interval_s,
        checkpoint_mode=mode,
        storage_target=StorageTarget.shared_fs("/campus/checkpoints"),
        estimated_duration_s=duration_s,
        affinity_window_s=affinity_window_s,
    )


def paper_shaped(seed: int) -> SimConfig:
    """Week-long mixed-churn scenario: 20 jobs, 2 provider nodes plus 2 spares.

    Jobs span most of the week and total capacity (30 GPUs) is tight enough
    that the churning provider nodes always carry live workloads, so every
    departure actually displaces something.
    """
    duration_s = 6.5 * 86400.0
    nodes = [
        SimNodeConfig("provider-a", 10, 24_000, (8, 0), 8.0, interruption_rate_per_day=1.6),
        SimNodeConfig("provider-b", 10, 24_000, (8, 0), 12.0, interruption_rate_per_day=1.6),
        SimNodeConfig("spare-a", 5, 24_000, (8, 0), 18.0),
        SimNodeConfig("spare-b", 5, 24_000, (8, 0), 22.0),
    ]
    workloads = [
        SimWorkloadConfig(
            spec=_spec("paper", 3600.0, CheckpointMode.INCREMENTAL, duration_s),
            duration_s=duration_s,
            total_state_bytes=2 * GIB,
            arrival_s=60.0 * i,
            owner="provider-a" if i < 10 else "provider-b",
        )
        for i in range(20)
    ]
    return SimConfig(
        seed=seed,
        nodes=nodes,
        workloads=workloads,
        kind_mix={
            "scheduled_departure": 0.4,
            "emergency_departure": 0.3,
            "temporary_unavailability": 0.3,
        },
        temporary_duration_mean_s=900.0,
        link_bandwidth_mbps=1000.0,
        campus_bandwidth_mbps=25_000.0,
        sim_duration_s=7 * 86400.0,
        # 10 workloads x 7 s checkpoint cost must fit inside the grace window
        grace_s=120.0,
        rejoin_delay_s=1800.0,
    )


def inflation(seed: int, n_interruptions: int) -> SimConfig:
    """Single 8 h job disturbed by n scheduled departures.

    Checkpoint interval is 1% of the duration and checkpoints are Full, so
    each displacement costs exactly one full-state transfer plus the fixed
    restore overhead and zero lost work; the overhead has a closed form.
    """
    base_s = 28_800.0
    departures = [3600.0, 7200.0, 10_800.0, 14_400.0][:n_interruptions]
    # the job hops A -> B -> A -> B; departures alternate accordingly
    hosts = ["node-a", "node-b", "node-a", "node-b"]
    nodes = [
        SimNodeConfig("node-a", 1, 24_000, (8, 0), 10.0),
        SimNodeConfig("node-b", 1, 24_000, (8, 0), 20.0),
        SimNodeConfig("node-c", 1, 24_000, (8, 0), 30.0),
    ]
    workloads = [
        SimWorkloadConfig(
            spec=_spec("inflation", 288.0, CheckpointMode.FULL, base_s),
            duration_s=base_s,
            total_state_bytes=10 * GIB,
        )
    ]
    return SimConfig(
        seed=seed,
        nodes=nodes,
        workloads=workloads,
        kind_mix={"scheduled_departure": 1.0},
        temporary_duration_mean_s=600.0,
        link_bandwidth_mbps=191.0,
        campus_bandwidth_mbps=25_000.0,
        sim_duration_s=36_000.0,
        grace_s=60.0,
        rejoin_delay_s=600.0,
        explicit_events=[
            {"node": hosts[i], "at_s": at, "kind": "scheduled_departure"}
            for i, at in enumerate(departures)
        ],
    )


def emergency_loss(seed: int) -> SimConfig:
    """Two nodes trading a long job under pure emergency churn.

    Crash phase is uniform within the 600 s checkpoint grid, so mean lost
    work converges to interval/2 = 300 s.
    """
    nodes = [
        SimNodeConfig("node-a", 1, 24_000, (8, 0), 10.0, interruption_rate_per_day=3.0),
        SimNodeConfig("node-b", 1, 24_000, (8, 0), 20.0, interruption_rate_per_day=3.0),
    ]
    workloads = [
        SimWorkloadConfig(
            spec=_spec("emergency", 600.0, CheckpointMode.INCREMENTAL, 100 * 86400.0),
            duration_s=100 * 86400.0,
            total_state_bytes=GIB,
        )
    ]
    return SimConfig(
        seed=seed,
        nodes=nodes,
        workloads=workloads,
        kind_mix={"emergency_departure": 1.0},
        temporary_duration_mean_s=600.0,
        link_bandwidth_mbps=1000.0,
        campus_bandwidth_mbps=25_000.0,
        sim_duration_s=7 * 86400.0,
        rejoin_delay_s=600.0,
    )


RETURN_AFFINITY_WINDOW_S = 1800.0
RETURN_MEAN_DOWNTIME_S = 1623.0


def return_migration(seed: int) -> SimConfig:
    """One node, one job, one temporary outage with a seeded exponential
    duration; analytic P(return) = 1 - exp(-window/mean) ~= 0.67."""
    downtime_s = random.Random(f"{seed}:downtime").expovariate(1.0 / RETURN_MEAN_DOWNTIME_S)
    onset_s = 7200.0
    nodes = [SimNodeConfig("node-a", 1, 24_000, (8, 0), 10.0)]
    workloads = [
        SimWorkloadConfig(
            spec=_spec(
                "return",
                600.0,
                CheckpointMode.INCREMENTAL,
                30 * 86400.0,
                affinity_window_s=RETURN_AFFINITY_WINDOW_S,
            ),
            duration_s=30 * 86400.0,
            total_state_bytes=GIB,
        )
    ]
    return SimConfig(
        seed=seed,
        nodes=nodes,
        workloads=workloads,
        kind_mix={"temporary_unavailability": 1.0},
        temporary_duration_mean_s=RETURN_MEAN_DOWNTIME_S,
        link_bandwidth_mbps=1000.0,
        campus_bandwidth_mbps=25_000.0,
        sim_duration_s=onset_s + downtime_s + 300.0,
        explicit_events=[
            {
                "node": "node-a",
                "at_s": onset_s,
                "kind": "temporary_unavailability",
                "duration_s": downtime_s,
            }
        ],
    )


def bandwidth(seed: int, full_only: bool = False) -> SimConfig:
    """20 parallel jobs checkpointing 2 GiB state on a 25 Gbps campus.

    Arrivals are 90 s apart so the unavoidable initial full captures never
    share a 60 s accounting window, and the two job groups use different
    checkpoint intervals (600 s vs 660 s) so later captures do collide.
    In incremental mode a collision is two small deltas; in full-only mode
    it is two full-state transfers, which strictly raises the peak share.
    Durations stay under 10 intervals so incremental chains never refresh
    with a second full.
    """
    mode = CheckpointMode.FULL if full_only else CheckpointMode.INCREMENTAL
    nodes = [
        SimNodeConfig("node-a", 10, 24_000, (8, 0), 10.0),
        SimNodeConfig("node-b", 10, 24_000, (8, 0), 20.0),
    ]
    duration_s = 5400.0
    workloads = [
        SimWorkloadConfig(
            spec=_spec("bandwidth", 600.0 if i < 10 else 660.0, mode, duration_s),
            duration_s=duration_s,
            total_state_bytes=2 * GIB,
            dirty_fraction=0.10,
            arrival_s=90.0 * i,
        )
        for i in range(20)
    ]
    return SimConfig(
        seed=seed,
        nodes=nodes,
        workloads=workloads,
        kind_mix={},
        temporary_duration_mean_s=600.0,
        link_bandwidth_mbps=2000.0,
        campus_bandwidth_mbps=25_000.0,
        sim_duration_s=7800.0,
    )


def ownership_skew(seed: int) -> SimConfig:
    """8 equal jobs all owned by one of two 4-GPU nodes.

    Shared pool runs all 8 in parallel; the static baseline serializes two
    waves on the owner and the second wave is cut off at sim end.
    """
    duration_s = 7200.0
    nodes = [
        SimNodeConfig("owner", 4, 24_000, (8, 0), 10.0),
        SimNodeConfig("neighbor", 4, 24_000, (8, 0), 20.0),
    ]
    workloads = [
        SimWorkloadConfig(
            spec=_spec("skew", 3600.0, CheckpointMode.INCREMENTAL, duration_s),
            duration_s=duration_s,
            total_state_bytes=GIB,
            owner="owner",
        )
        for _ in range(8)
    ]
    return SimConfig(
        seed=seed,
        nodes=nodes,
        workloads=workloads,
        kind_mix={},
        temporary_duration_mean_s=600.0,
        link_bandwidth_mbps=1000.0,
        campus_bandwidth_mbps=25_000.0,
        sim_duration_s=duration_s * 1.2,
    )


SCENARIOS = {
    "paper-shaped": paper_shaped,
    "emergency-loss": emergency_loss,
    "return-migration": return_migration,
    "bandwidth": bandwidth,
    "ownership-skew": ownership_skew,
}
