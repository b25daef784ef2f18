"""Discrete-event churn simulator.

The engine owns only orchestration: a manual clock, an event heap, and the
interruption trace. Scheduling, failure detection, checkpointing, restore,
and lost-work arithmetic all run through the production coordinator, agent,
and resilience code — the simulator contains no second implementation of
any of those rules.

Heartbeats are elided between interesting moments: an agent heartbeats
whenever the engine pumps it (arrivals, directives pending, interruption
onsets, detection sweeps), and the failure detector is invoked exactly
3 heartbeat intervals after a node falls silent. The detector itself still
applies its own counting rule; the engine only picks the evaluation times.
"""

from __future__ import annotations

import heapq
import random
import shutil
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

from gpunion.agent.config import AgentConfig
from gpunion.agent.core import Agent
from gpunion.agent.runtime import SimulatedRuntime, SimWorkloadModel
from gpunion.agent.telemetry import SimulatedProbe
from gpunion.agent.transport import InProcTransport
from gpunion.clock import ManualClock
from gpunion.coordinator.config import SchedulerConfig
from gpunion.coordinator.core import Coordinator
from gpunion.domain.ids import NodeId
from gpunion.domain.types import (
    GpuDescriptor,
    InterruptionEvent,
    InterruptionKind,
    JobRecord,
    NodeState,
)
from gpunion.errors import UnknownNode
from gpunion.resilience.store import BandwidthLedger, CheckpointStore
from gpunion.sim.config import SimConfig
from gpunion.sim.trace import generate_trace, node_id_for

_ACTIVE_STATES = (NodeState.ACTIVE, NodeState.PAUSED, NodeState.DRAINING)


@dataclass
class Segment:
    """One container serving a job: where it ran and from what progress."""

    node: str
    container_id: str
    ready_ms: int
    base_ms: int


@dataclass
class Stop:
    """Moment a segment stopped advancing the job's lineage."""

    at_ms: int
    progress_ms: int
    reason: str  # "graceful" | "emergency" | "temporary"


@dataclass
class JobTimeline:
    job_id: str
    arrival_ms: int
    base_ms: int
    segments: list[Segment] = field(default_factory=list)
    stops: list[Stop] = field(default_factory=list)
    completed_at_ms: int | None = None


@dataclass
class _SimNode:
    name: str
    node_id: NodeId
    gpus: list[GpuDescriptor]
    agent: Agent
    runtime: SimulatedRuntime


class SimEngine:
    def __init__(self, config: SimConfig, owner_restricted: bool = False) -> None:
        self.config = config
        self.owner_restricted = owner_restricted
        self.clock = ManualClock(0)
        self.trace = generate_trace(config)
        self.ledger = BandwidthLedger()
        self.store = CheckpointStore()
        self.trace_rows: list[dict] = []
        self.timelines: dict[str, JobTimeline] = {}
        self._heap: list[tuple[int, int, str, tuple]] = []
        self._heap_seq = 0
        self._tracked: dict[tuple[str, str], str] = {}  # (node, job) -> container id
        self._detect_at: dict[str, int] = {}
        self._tmpdir = Path(tempfile.mkdtemp(prefix="gpunion-sim-"))

        digests = {wl.spec.image_digest for wl in config.workloads}
        self._owner_by_job: dict[str, NodeId] = {}
        for idx, wl in enumerate(config.workloads):
            if wl.owner:
                self._owner_by_job[self._job_id(idx)] = node_id_for(wl.owner)
        eligibility = self._owner_eligibility if owner_restricted else None
        self.coord = Coordinator(
            SchedulerConfig(
                heartbeat_interval_s=config.heartbeat_interval_s,
                grace_default_s=config.grace_s,
                allow_list=digests,
            ),
            clock=self.clock,
            rng=random.Random(f"{config.seed}:coordinator"),
            eligibility=eligibility,
        )
        self.nodes: dict[str, _SimNode] = {}
        self._name_by_id: dict[NodeId, str] = {}
        for nc in config.nodes:
            nid = node_id_for(nc.name)
            gpus = [
                GpuDescriptor(i, nc.gpu_model, nc.gpu_memory_mib, nc.compute_capability)
                for i in range(nc.gpu_count)
            ]
            runtime = SimulatedRuntime(self.clock)
            for idx, wl in enumerate(config.workloads):
                runtime.register_model(
                    self._job_id(idx),
                    SimWorkloadModel(
                        duration_s=wl.duration_s,
                        total_state_bytes=wl.total_state_bytes,
                        dirty_fraction=wl.dirty_fraction,
                    ),
                )
            state_dir = self._tmpdir / nc.name
            state_dir.mkdir(parents=True)
            (state_dir / "node_id").write_text(nid.value + "\n")
            agent = Agent(
                config=AgentConfig(
                    state_dir=state_dir,
                    heartbeat_interval_s=config.heartbeat_interval_s,
                    grace_default_s=config.grace_s,
                    link_bandwidth_mbps=config.link_bandwidth_mbps,
                    restore_overhead_s=config.restore_overhead_s,
                    latency_ms=nc.latency_ms,
                ),
                runtime=runtime,
                probe=SimulatedProbe(gpus, runtime, self.clock),
                transport=InProcTransport(self.coord),
                clock=self.clock,
                store=self.store,
                ledger=self.ledger,
            )
            self.nodes[nc.name] = _SimNode(nc.name, nid, gpus, agent, runtime)
            self._name_by_id[nid] = nc.name

    # ------------------------------------------------------------------
    # setup helpers

    @staticmethod
    def _job_id(index: int) -> str:
        return f"job-{index:03d}"

    def _owner_eligibility(self, job: JobRecord, node_id: NodeId) -> bool:
        owner = self._owner_by_job.get(job.job_id)
        return owner is None or owner == node_id

    @property
    def end_ms(self) -> int:
        return int(round(self.config.sim_duration_s * 1000))

    def _push(self, at: int, kind: str, data: tuple) -> None:
        self._heap_seq += 1
        heapq.heappush(self._heap, (at, self._heap_seq, kind, data))

    def _row(self, kind: str, node: str = "", job: str = "", detail: str = "") -> None:
        self.trace_rows.append(
            {"at_ms": self.clock.now_ms(), "kind": kind, "node": node, "job": job, "detail": detail}
        )

    # ------------------------------------------------------------------
    # main loop

    def run(self) -> "SimEngine":
        try:
            for sn in [self.nodes[n] for n in sorted(self.nodes)]:
                sn.agent.join(sn.gpus, sleep=lambda _s: None)
                self._row("join", node=sn.name)
            for idx, wl in enumerate(self.config.workloads):
                self._push(int(round(wl.arrival_s * 1000)), "arrival", (idx,))
            for ie in self.trace:
                self._push(ie.at, "interrupt", (ie,))
            day = 86_400_000
            t = day
            while t < self.end_ms:
                self._push(t, "day_roll", ())
                t += day
            while self._heap:
                at, _, kind, data = heapq.heappop(self._heap)
                if at > self.end_ms:
                    break
                self.clock.advance_to(at)
                getattr(self, f"_on_{kind}")(*data)
            self.clock.advance_to(self.end_ms)
        finally:
            shutil.rmtree(self._tmpdir, ignore_errors=True)
        return self

    # ------------------------------------------------------------------
    # event handlers

    def _on_arrival(self, index: int) -> None:
        wl = self.config.workloads[index]
        job_id = self._job_id(index)
        self.coord.enqueue_job(wl.spec, job_id=job_id)
        self.timelines[job_id] = JobTimeline(
            job_id=job_id,
            arrival_ms=self.clock.now_ms(),
            base_ms=int(round(wl.duration_s * 1000)),
        )
        self._row("arrival", job=job_id)
        self._settle()

    def _on_interrupt(self, ie: InterruptionEvent) -> None:
        name = self._name_by_id[ie.node]
        sn = self.nodes[name]
        if not sn.agent.alive:
            self._row("interrupt_dropped", node=name, detail=ie.kind.value)
            return
        now = self.clock.now_ms()
        sn.agent.pump()  # last heartbeat lands at the onset
        self._row("interrupt", node=name, detail=ie.kind.value)
        if ie.kind is InterruptionKind.SCHEDULED_DEPARTURE:
            self._record_stops(sn, "graceful")
            report = sn.agent.drain(self.config.grace_s)
            for at, job_id, what in report.events:
                self.trace_rows.append(
                    {"at_ms": at, "kind": f"departure_{what}", "node": name, "job": job_id, "detail": ""}
                )
            self._maybe_rejoin(name)
            self._settle()
        elif ie.kind is InterruptionKind.EMERGENCY_DEPARTURE:
            self._record_stops(sn, "emergency")
            sn.agent.crash()
            self._schedule_detect(name)
            self._maybe_rejoin(name)
        else:
            sn.agent.suspend()
            self._schedule_detect(name)
            self._push(now + int(round(ie.duration_s * 1000)), "reconnect", (name,))

    def _schedule_detect(self, name: str) -> None:
        at = self.clock.now_ms() + 3 * self.coord.config.heartbeat_interval_ms
        self._detect_at[name] = at
        self._push(at, "detect", (name,))

    def _maybe_rejoin(self, name: str) -> None:
        if self.config.rejoin_delay_s > 0:
            self._push(
                self.clock.now_ms() + int(round(self.config.rejoin_delay_s * 1000)),
                "rejoin",
                (name,),
            )

    def _on_detect(self, _name: str) -> None:
        self._pump_alive()
        newly = self.coord.detect_failures(self.clock.now_ms())
        for node_id in newly:
            name = self._name_by_id[node_id]
            # Suspended nodes keep their workload handles; those jobs'
            # lineage stops at detection (their later compute is discarded).
            self._record_stops(self.nodes[name], "temporary")
            self._row("detected_unavailable", node=name)
        if newly:
            self._settle()

    def _on_reconnect(self, name: str) -> None:
        sn = self.nodes[name]
        sn.agent.resume_connectivity()
        sn.agent.pump()  # reconnect + stale-container cleanup directives
        self._row("reconnect", node=name)
        for job_id in sorted(sn.agent.workloads):
            handle = sn.agent.workloads[job_id]
            if sn.runtime.completion_at_ms(handle.container_id) <= self.clock.now_ms():
                sn.agent.complete_workload(job_id)
                self._mark_completed(job_id)
        self._settle()

    def _on_rejoin(self, name: str) -> None:
        sn = self.nodes[name]
        if sn.agent.alive:
            return
        if (
            self.coord.has_node(sn.node_id)
            and self.coord.node_record(sn.node_id).state in _ACTIVE_STATES
        ):
            # Not yet detected as gone; retry just after the detector fires.
            self._push(max(self.clock.now_ms(), self._detect_at.get(name, 0)) + 1, "rejoin", (name,))
            return
        sn.agent.join(sn.gpus, sleep=lambda _s: None)
        self._row("rejoin", node=name)
        self._settle()

    def _on_day_roll(self) -> None:
        for name in sorted(self.nodes):
            try:
                self.coord.update_volatility(self.nodes[name].node_id, "day-elapsed")
            except UnknownNode:
                pass

    def _on_checkpoint(self, name: str, job_id: str, container_id: str, generation: int) -> None:
        sn = self.nodes[name]
        handle = sn.agent.workloads.get(job_id)
        if (
            handle is None
            or handle.container_id != container_id
            or handle.checkpoint_generation != generation
        ):
            return
        now = self.clock.now_ms()
        if not sn.agent.alive:
            # Network outage: storage unreachable, retry next interval.
            interval = int(round(handle.spec.checkpoint_interval_s * 1000))
            self._push(now + interval, "checkpoint", (name, job_id, container_id, generation))
            return
        if sn.runtime.completion_at_ms(container_id) <= now:
            return
        manifest = sn.agent.checkpoint_workload(job_id)
        sn.agent.pump()
        self._row(
            "checkpoint",
            node=name,
            job=job_id,
            detail=str(manifest.payload_bytes) if manifest else "skipped",
        )
        self._push(
            handle.next_checkpoint_at,
            "checkpoint",
            (name, job_id, handle.container_id, handle.checkpoint_generation),
        )

    def _on_completion(self, name: str, job_id: str, container_id: str) -> None:
        sn = self.nodes[name]
        if not sn.agent.alive:
            return  # reconnect sweep reports it, or the job moved elsewhere
        handle = sn.agent.workloads.get(job_id)
        if handle is None or handle.container_id != container_id:
            return
        sn.agent.complete_workload(job_id)
        self._mark_completed(job_id)
        self._row("completed", node=name, job=job_id)
        self._settle()

    # ------------------------------------------------------------------
    # orchestration helpers

    def _mark_completed(self, job_id: str) -> None:
        tl = self.timelines.get(job_id)
        if tl is not None and tl.completed_at_ms is None:
            tl.completed_at_ms = self.clock.now_ms()

    def _record_stops(self, sn: _SimNode, reason: str) -> None:
        for job_id in sorted(sn.agent.workloads):
            handle = sn.agent.workloads[job_id]
            progress = sn.runtime.progress_ms(handle.container_id)
            tl = self.timelines.get(job_id)
            if tl is not None:
                tl.stops.append(Stop(self.clock.now_ms(), progress, reason))

    def _pump_alive(self) -> None:
        for name in sorted(self.nodes):
            if self.nodes[name].agent.alive:
                self.nodes[name].agent.pump()

    def _pump_pending(self) -> bool:
        pumped = False
        for name in sorted(self.nodes):
            sn = self.nodes[name]
            if not sn.agent.alive:
                continue
            if sn.agent.pending_report_count or self.coord.pending_directive_count(sn.node_id):
                sn.agent.pump()
                pumped = True
        return pumped

    def _settle(self) -> None:
        """Alternate scheduling passes and heartbeat pumps to a fixed point."""
        for _ in range(10):
            before = len(self.coord.log)
            self.coord.schedule_tick(self.clock.now_ms())
            pumped = self._pump_pending()
            if len(self.coord.log) == before and not pumped:
                break
        self._sync_workloads()

    def _sync_workloads(self) -> None:
        """Register timers and segments for containers launched since last sync."""
        for name in sorted(self.nodes):
            sn = self.nodes[name]
            for job_id in sorted(sn.agent.workloads):
                handle = sn.agent.workloads[job_id]
                key = (name, job_id)
                if self._tracked.get(key) == handle.container_id:
                    continue
                self._tracked[key] = handle.container_id
                container = sn.runtime.container(handle.container_id)
                tl = self.timelines.get(job_id)
                if tl is not None:
                    tl.segments.append(
                        Segment(name, handle.container_id, container.ready_at_ms, container.progress_base_ms)
                    )
                self._row("launch", node=name, job=job_id, detail=str(container.progress_base_ms))
                self._push(
                    sn.runtime.completion_at_ms(handle.container_id),
                    "completion",
                    (name, job_id, handle.container_id),
                )
                self._push(
                    handle.next_checkpoint_at,
                    "checkpoint",
                    (name, job_id, handle.container_id, handle.checkpoint_generation),
                )

    # ------------------------------------------------------------------
    # post-run accounting

    def busy_gpu_seconds(self) -> float:
        """GPU-busy time across all containers ever launched, in seconds."""
        total_ms = 0
        for tl in self.timelines.values():
            for seg in tl.segments:
                runtime = self.nodes[seg.node].runtime
                total_ms += runtime.progress_ms(seg.container_id) - seg.base_ms
        return total_ms / 1000.0

    def utilization_pct(self) -> float:
        gpu_count = sum(len(sn.gpus) for sn in self.nodes.values())
        denom = gpu_count * self.config.sim_duration_s
        return 100.0 * self.busy_gpu_seconds() / denom if denom else 0.0


def run(config: SimConfig):
    from gpunion.sim.report import build_report

    return build_report(SimEngine(config).run())


def run_baseline(config: SimConfig) -> float:
    """Static ownership: jobs may only run on their owner's node."""
    return SimEngine(config, owner_restricted=True).run().utilization_pct()
