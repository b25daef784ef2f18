"""Provider agent: join/backoff, heartbeat loop, checkpoints, kill-switch."""

from __future__ import annotations

import pytest

from gpunion.agent.config import AgentConfig
from gpunion.agent.core import Agent
from gpunion.agent.runtime import SimulatedRuntime, SimWorkloadModel, WorkloadPhase
from gpunion.agent.telemetry import FailingProbe, SimulatedProbe
from gpunion.agent.transport import BlackholeTransport, InProcTransport
from gpunion.clock import ManualClock
from gpunion.domain.types import CheckpointMode, JobState, NodeState
from gpunion.errors import CoordinatorUnreachable
from gpunion.resilience.store import BandwidthLedger, CheckpointStore

from .conftest import TRUSTED_DIGEST, make_coordinator, make_gpus, make_spec


def make_agent(clock, coord, tmp_path, probe=None, transport=None, **cfg_overrides):
    config = AgentConfig(state_dir=tmp_path / "agent", heartbeat_interval_s=10.0, **cfg_overrides)
    runtime = SimulatedRuntime(clock)
    gpus = make_gpus(2)
    agent = Agent(
        config=config,
        runtime=runtime,
        probe=probe or SimulatedProbe(gpus, runtime, clock),
        transport=transport or InProcTransport(coord),
        clock=clock,
        store=CheckpointStore(),
        ledger=BandwidthLedger(),
    )
    return agent, gpus


def launch_one(clock, coord, agent, gpus, **spec_overrides):
    agent.join(gpus)
    job_id = coord.enqueue_job(make_spec(**spec_overrides))
    coord.schedule_tick()
    agent.pump()  # pick up + execute launch directive
    agent.pump()  # deliver the "launched" report
    assert coord.get_job(job_id).state is JobState.RUNNING
    return job_id


class TestJoin:
    def test_backoff_is_capped_exponential(self, clock, tmp_path):
        agent, gpus = make_agent(clock, None, tmp_path, transport=BlackholeTransport())
        sleeps = []
        with pytest.raises(CoordinatorUnreachable):
            agent.join(gpus, max_attempts=9, max_backoff_s=16.0, sleep=sleeps.append)
        assert sleeps == [1.0, 2.0, 4.0, 8.0, 16.0, 16.0, 16.0, 16.0]
        assert not agent.alive

    def test_identity_persists_across_restart(self, clock, coord, tmp_path):
        agent, gpus = make_agent(clock, coord, tmp_path)
        nid = agent.join(gpus)
        coord.update_volatility(nid, "interruption")
        score = coord.update_volatility(nid, "day-elapsed")
        agent.kill_switch(0, allow_checkpoint=False)
        agent2, gpus2 = make_agent(clock, coord, tmp_path)
        assert agent2.load_identity() == nid
        assert agent2.join(gpus2) == nid
        assert coord.node_record(nid).volatility_score == score

    def test_adopts_coordinator_heartbeat_interval(self, clock, tmp_path):
        coord = make_coordinator(clock, heartbeat_interval_s=25.0)
        agent, gpus = make_agent(clock, coord, tmp_path)
        agent.join(gpus)
        assert agent.config.heartbeat_interval_s == 25.0

    def test_tick_respects_cadence(self, clock, coord, tmp_path):
        agent, gpus = make_agent(clock, coord, tmp_path)
        nid = agent.join(gpus)
        assert agent.tick() is not None  # due immediately after join
        assert agent.tick() is None
        clock.advance(9_999)
        assert agent.tick() is None
        clock.advance(1)
        assert agent.tick() is not None
        assert coord.node_record(nid).last_heartbeat_seq == 2


class TestHeartbeatLoop:
    def test_failing_probe_does_not_suppress_heartbeat(self, clock, coord, tmp_path):
        agent, gpus = make_agent(clock, coord, tmp_path, probe=FailingProbe())
        nid = agent.join(gpus)
        ack = agent.heartbeat()
        assert ack is not None
        assert coord.node_record(nid).last_heartbeat_seq == 1

    def test_unreachable_coordinator_keeps_reports(self, clock, coord, tmp_path):
        agent, gpus = make_agent(clock, coord, tmp_path)
        job_id = launch_one(clock, coord, agent, gpus)
        agent.checkpoint_workload(job_id)
        assert agent.pending_report_count == 1
        good_transport = agent.transport
        agent.transport = BlackholeTransport()
        assert agent.heartbeat() is None
        assert agent.pending_report_count == 1  # retained for retry
        agent.transport = good_transport
        agent.heartbeat()
        assert agent.pending_report_count == 0
        assert coord.job_checkpoint_tail(job_id) is not None

    def test_digest_mismatch_reports_failure(self, clock, coord, tmp_path):
        agent, gpus = make_agent(clock, coord, tmp_path)
        agent.runtime.trusted_images["registry.campus/test:1"] = "f" * 64
        agent.join(gpus)
        job_id = coord.enqueue_job(make_spec())  # requests TRUSTED_DIGEST
        coord.schedule_tick()
        agent.pump()
        agent.pump()
        assert coord.get_job(job_id).state is JobState.FAILED
        assert agent.workloads == {}


class TestCheckpointCadence:
    def test_periodic_checkpoints_and_generation(self, clock, coord, tmp_path):
        agent, gpus = make_agent(clock, coord, tmp_path)
        job_id = launch_one(clock, coord, agent, gpus, checkpoint_interval_s=600.0)
        handle = agent.workloads[job_id]
        first_due = handle.next_checkpoint_at
        clock.advance_to(first_due)
        m1 = agent.checkpoint_workload(job_id)
        assert m1 is not None and m1.seq == 0 and m1.is_full
        assert handle.checkpoint_generation == 1
        assert handle.next_checkpoint_at == first_due + 600_000
        clock.advance(600_000)
        m2 = agent.checkpoint_workload(job_id)
        assert m2.seq == 1 and m2.parent_seq == 0 and not m2.is_full
        assert m2.created_at > m1.created_at

    def test_full_mode_never_links(self, clock, coord, tmp_path):
        agent, gpus = make_agent(clock, coord, tmp_path)
        job_id = launch_one(clock, coord, agent, gpus, checkpoint_mode=CheckpointMode.FULL)
        clock.advance(600_000)
        agent.checkpoint_workload(job_id)
        clock.advance(600_000)
        m = agent.checkpoint_workload(job_id)
        assert m.is_full and m.parent_seq is None

    def test_unavailable_target_skips_and_retries(self, clock, coord, tmp_path):
        from gpunion.domain.ids import NodeId
        from gpunion.domain.types import StorageTarget

        agent, gpus = make_agent(clock, coord, tmp_path)
        agent.store = CheckpointStore(node_available=lambda nid: available)
        peer = NodeId.generate()
        target = StorageTarget.node(peer, "/srv/ckpt")
        available = False
        job_id = launch_one(clock, coord, agent, gpus, storage_target=target)
        clock.advance(600_000)
        assert agent.checkpoint_workload(job_id) is None
        assert agent.workloads[job_id].phase is WorkloadPhase.RUNNING
        available = True
        clock.advance(600_000)
        assert agent.checkpoint_workload(job_id) is not None

    def test_backup_transfers_share_one_uplink(self, clock, coord, tmp_path):
        agent, gpus = make_agent(clock, coord, tmp_path, link_bandwidth_mbps=8.0)
        agent.join(gpus)
        a = coord.enqueue_job(make_spec())
        b = coord.enqueue_job(make_spec())
        coord.schedule_tick()
        agent.pump()
        agent.pump()
        clock.advance(600_000)
        agent.checkpoint_workload(a)
        agent.checkpoint_workload(b)
        backups = sorted(
            (t for t in agent.ledger.transfers if t.category == "backup"),
            key=lambda t: t.start_ms,
        )
        assert len(backups) == 2
        assert backups[1].start_ms >= backups[0].end_ms  # serialized, not overlapped


class TestKillSwitch:
    def test_grace_zero_terminates_immediately_even_blackholed(self, clock, coord, tmp_path):
        agent, gpus = make_agent(clock, coord, tmp_path)
        job_id = launch_one(clock, coord, agent, gpus)
        agent.transport = BlackholeTransport()
        report = agent.kill_switch(0)
        assert report.completed_at == report.started_at
        assert report.manifests == []
        assert report.notified is False
        assert agent.alive is False
        assert agent.workloads == {}
        assert report.events == [(report.started_at, job_id, "terminated")]

    def test_grace_with_checkpoints_orders_events(self, clock, coord, tmp_path):
        agent, gpus = make_agent(clock, coord, tmp_path)
        agent.join(gpus)
        jobs = sorted([coord.enqueue_job(make_spec()), coord.enqueue_job(make_spec())])
        for j in jobs:
            agent.runtime.register_model(
                j, SimWorkloadModel(3600.0, 2**30, checkpoint_base_s=20.0, checkpoint_per_gib_s=0.0)
            )
        coord.schedule_tick()
        agent.pump()
        clock.advance(1_000_000)
        start = clock.now_ms()
        report = agent.kill_switch(60.0)
        # two 20 s checkpoints fit inside 60 s, then both terminate
        assert [(at - start, j, k) for at, j, k in report.events] == [
            (20_000, jobs[0], "checkpointed"),
            (40_000, jobs[1], "checkpointed"),
            (40_000, jobs[0], "terminated"),
            (40_000, jobs[1], "terminated"),
        ]
        assert [m.job_id for m in report.manifests] == jobs
        assert report.notified is True
        assert coord.node_record(agent.node_id).state is NodeState.DEPARTED

    def test_checkpoint_skipped_when_it_cannot_fit(self, clock, coord, tmp_path):
        agent, gpus = make_agent(clock, coord, tmp_path)
        agent.join(gpus)
        job_id = coord.enqueue_job(make_spec())
        agent.runtime.register_model(
            job_id,
            SimWorkloadModel(3600.0, 2**30, checkpoint_base_s=90.0, checkpoint_per_gib_s=0.0),
        )
        coord.schedule_tick()
        agent.pump()
        report = agent.kill_switch(60.0)
        assert report.manifests == []
        assert [k for _, _, k in report.events] == ["terminated"]

    def test_drain_notice_is_graceful_even_without_workloads(self, clock, coord, tmp_path):
        agent, gpus = make_agent(clock, coord, tmp_path)
        nid = agent.join(gpus)
        report = agent.drain()
        assert report.notified is True
        assert coord.node_record(nid).state is NodeState.DEPARTED

    def test_crash_kills_containers_without_notice(self, clock, coord, tmp_path):
        agent, gpus = make_agent(clock, coord, tmp_path)
        job_id = launch_one(clock, coord, agent, gpus)
        cid = agent.workloads[job_id].container_id
        agent.crash()
        assert agent.runtime.container(cid).exit_code == 137
        assert not agent.alive
        # coordinator only learns via missed heartbeats
        assert coord.node_record(agent.node_id).state is NodeState.ACTIVE

    def test_suspend_and_reconnect(self, clock, coord, tmp_path):
        agent, gpus = make_agent(clock, coord, tmp_path)
        nid = agent.join(gpus)
        agent.pump()
        agent.suspend()
        clock.advance(30_000)
        assert agent.tick() is None
        coord.detect_failures()
        assert coord.node_record(nid).state is NodeState.UNAVAILABLE
        agent.resume_connectivity()
        ack = agent.tick()
        assert ack["return_migration_check"] is True
        assert coord.node_record(nid).state is NodeState.ACTIVE


class TestRestoreOnMigration:
    def test_displaced_job_restores_on_second_node(self, clock, tmp_path):
        coord = make_coordinator(clock)
        agent1, gpus1 = make_agent(clock, coord, tmp_path / "a")
        agent2, gpus2 = make_agent(clock, coord, tmp_path / "b")
        shared_store = CheckpointStore()
        agent1.store = shared_store
        agent2.store = shared_store
        job_id = launch_one(clock, coord, agent1, gpus1)
        clock.advance(600_000)
        agent1.checkpoint_workload(job_id)
        agent1.pump()
        progress_at_ckpt = 600_000
        agent1.crash()
        clock.advance(30_000)
        coord.detect_failures()
        assert coord.get_job(job_id).state is JobState.PENDING
        agent2.join(gpus2)
        coord.schedule_tick()
        agent2.pump()
        handle = agent2.workloads[job_id]
        container = agent2.runtime.container(handle.container_id)
        assert container.progress_base_ms == progress_at_ckpt
        assert container.ready_at_ms > clock.now_ms()  # transfer + restore overhead
        restores = [t for t in agent2.ledger.transfers if t.category == "restore"]
        assert len(restores) == 1
