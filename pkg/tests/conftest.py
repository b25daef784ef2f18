"""Shared fixtures and builders for the test suite."""

from __future__ import annotations

import hashlib
import random

import pytest

from gpunion.clock import ManualClock
from gpunion.coordinator.config import SchedulerConfig
from gpunion.coordinator.core import Coordinator
from gpunion.domain.types import (
    CheckpointMode,
    GpuDescriptor,
    JobMode,
    JobSpec,
    StorageTarget,
)

TRUSTED_DIGEST = hashlib.sha256(b"test-image").hexdigest()


def make_gpus(count: int = 1, memory_mib: int = 24_000, capability=(8, 0)) -> list[GpuDescriptor]:
    return [GpuDescriptor(i, "sim-gpu", memory_mib, capability) for i in range(count)]


def make_spec(**overrides) -> JobSpec:
    fields = dict(
        image_ref="registry.campus/test:1",
        image_digest=TRUSTED_DIGEST,
        mode=JobMode.BATCH,
        entrypoint=("python", "train.py"),
        gpu_memory_mib_required=8000,
        min_compute_capability=(7, 0),
        priority=5,
        checkpoint_interval_s=600.0,
        checkpoint_mode=CheckpointMode.INCREMENTAL,
        storage_target=StorageTarget.shared_fs("/campus/checkpoints"),
        estimated_duration_s=3600.0,
        affinity_window_s=1800.0,
    )
    fields.update(overrides)
    return JobSpec(**fields)


def make_coordinator(
    clock: ManualClock | None = None,
    seed: int = 7,
    heartbeat_interval_s: float = 10.0,
    **config_overrides,
) -> Coordinator:
    config = SchedulerConfig(
        heartbeat_interval_s=heartbeat_interval_s,
        allow_list={TRUSTED_DIGEST},
        **config_overrides,
    )
    return Coordinator(config, clock=clock or ManualClock(0), rng=random.Random(seed))


def run_random_ops(seed: int, n_ops: int = 40, clock: ManualClock | None = None) -> Coordinator:
    """Drive a coordinator through a randomized-but-valid operation sequence.

    Used both for replay-equality checks and determinism checks: the same
    seed always produces the same event log.
    """
    from gpunion.errors import GpunionError

    rng = random.Random(seed)
    clock = clock or ManualClock(0)
    coord = make_coordinator(clock, seed=seed)
    nodes: list[tuple] = []  # (node_id, token, next_seq)
    jobs: list[str] = []

    def heartbeat(i):
        nid, token, seq = nodes[i]
        reports = []
        for job_id, gpu in list(coord.node_busy_map(nid).items()):
            roll = rng.random()
            if roll < 0.3:
                reports.append({"kind": "launched", "job_id": job_id})
            elif roll < 0.4:
                reports.append({"kind": "completed", "job_id": job_id})
        coord.process_heartbeat(nid, seq, token, reports=reports)
        nodes[i] = (nid, token, seq + 1)

    for _ in range(n_ops):
        op = rng.randrange(10)
        try:
            if op == 0 or not nodes:
                record, token = coord.register_node(
                    make_gpus(rng.randint(1, 3)), rng.uniform(1.0, 50.0)
                )
                nodes.append((record.id, token, 1))
            elif op in (1, 2, 3):
                heartbeat(rng.randrange(len(nodes)))
            elif op == 4:
                jobs.append(coord.enqueue_job(make_spec(priority=rng.randint(1, 9))))
            elif op == 5:
                coord.schedule_tick()
            elif op == 6:
                clock.advance(rng.choice([5_000, 10_000, 35_000]))
                coord.detect_failures()
            elif op == 7 and jobs:
                coord.cancel_job(rng.choice(jobs))
            elif op == 8:
                nid = nodes[rng.randrange(len(nodes))][0]
                if rng.random() < 0.5:
                    coord.pause_node(nid)
                else:
                    coord.resume_node(nid)
            elif op == 9:
                nid = nodes[rng.randrange(len(nodes))][0]
                if rng.random() < 0.3:
                    i = next(k for k, n in enumerate(nodes) if n[0] == nid)
                    coord.handle_departure(nid, "emergency")
                    nodes.pop(i)
                else:
                    coord.update_volatility(
                        nid, rng.choice(["interruption", "day-elapsed"])
                    )
        except GpunionError:
            pass
    return coord


@pytest.fixture
def clock() -> ManualClock:
    return ManualClock(0)


@pytest.fixture
def coord(clock) -> Coordinator:
    return make_coordinator(clock)


# ----------------------------------------------------------------------
# acceptance summary: one pass/fail line per criterion

_acceptance: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _acceptance[name] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_acceptance):
        outcome = _acceptance[name].upper()
        verdict = "PASS" if outcome == "PASSED" else "FAIL"
        terminalreporter.write_line(f"{name}: {verdict}")
