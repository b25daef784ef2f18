"""Central coordinator: registry, failure detection, scheduling, event sourcing.

Every state mutation flows through an event: command methods validate,
construct event payloads, and record them; ``_apply`` is the only code that
touches state. Replaying the recorded log therefore reconstructs the live
state exactly, which the test suite checks field-for-field.

The class itself is single-threaded by contract; concurrent API handlers
serialize through one lock around command calls (see coordinator.api).
"""

from __future__ import annotations

import hashlib
import random
import secrets
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Sequence

from gpunion.clock import Clock, SystemClock
from gpunion.coordinator import events as ev
from gpunion.coordinator.config import SchedulerConfig
from gpunion.coordinator.scheduling import (
    CandidateNode,
    advance_cursor,
    choose_node,
    eligible_gpu,
    filter_candidates,
)
from gpunion.domain.ids import NodeId, new_job_id
from gpunion.domain.state import JobEvent, NodeEvent, job_transition, node_transition
from gpunion.domain.types import (
    Allocation,
    CheckpointManifest,
    GpuDescriptor,
    GpuTelemetry,
    JobRecord,
    JobSpec,
    JobState,
    NodeRecord,
    NodeState,
)
from gpunion.domain.validate import validate_job_spec
from gpunion.domain.wire import (
    job_record_to_wire,
    job_spec_to_wire,
    manifest_from_wire,
    node_record_to_wire,
    telemetry_to_wire,
)
from gpunion.errors import (
    DuplicateActiveNode,
    EmptyGpuList,
    IllegalTransition,
    StaleSequence,
    Unauthorized,
    UnknownJob,
    UnknownNode,
)


def token_hash(token: str) -> str:
    return hashlib.sha256(token.encode()).hexdigest()


@dataclass
class _NodeInfo:
    record: NodeRecord
    last_heartbeat_at: int
    busy: dict[int, str] = field(default_factory=dict)  # gpu index -> job id
    day_count: int = 0
    directives: deque = field(default_factory=deque)


class Coordinator:
    def __init__(
        self,
        config: SchedulerConfig,
        clock: Clock | None = None,
        rng: random.Random | None = None,
        eligibility: Callable[[JobRecord, NodeId], bool] | None = None,
        log_sink: ev.FileEventLog | None = None,
    ) -> None:
        self.config = config
        self.clock = clock or SystemClock()
        self._rng = rng
        self._eligibility = eligibility
        self._log_sink = log_sink
        self.log: list[ev.EventLogEntry] = []
        self._nodes: dict[NodeId, _NodeInfo] = {}
        self._jobs: dict[str, JobRecord] = {}
        self._enqueue_counter = 0
        self._rr_cursor = 0
        self._chain_tails: dict[str, CheckpointManifest] = {}
        self._telemetry_latest: dict[tuple[str, int], GpuTelemetry] = {}
        self.counters: dict[str, int] = {
            "migrations_total": 0,
            "heartbeat_misses_total": 0,
            "checkpoint_bytes_total": 0,
        }

    # ------------------------------------------------------------------
    # event plumbing

    def _record(self, payload: ev.EventPayload) -> ev.EventLogEntry:
        entry = ev.EventLogEntry(seq=len(self.log), at=self.clock.now_ms(), payload=payload)
        self.log.append(entry)
        self._apply(entry)
        if self._log_sink is not None:
            self._log_sink.append(entry)
        return entry

    @classmethod
    def replay(
        cls,
        config: SchedulerConfig,
        entries: Sequence[ev.EventLogEntry],
        clock: Clock | None = None,
        eligibility: Callable[[JobRecord, NodeId], bool] | None = None,
    ) -> "Coordinator":
        """Rebuild coordinator state by applying a gapless event log."""
        ev.check_gapless(entries)
        coord = cls(config, clock=clock, eligibility=eligibility)
        for entry in entries:
            coord.log.append(entry)
            coord._apply(entry)
        return coord

    def _apply(self, entry: ev.EventLogEntry) -> None:
        p = entry.payload
        at = entry.at
        if isinstance(p, ev.NodeRegistered):
            existing = self._nodes.get(p.node_id)
            if p.rejoined and existing is not None:
                vol = existing.record.volatility_score
                day = existing.day_count
            else:
                vol = self.config.volatility_prior
                day = 0
            self._nodes[p.node_id] = _NodeInfo(
                record=NodeRecord(
                    id=p.node_id,
                    gpus=list(p.gpus),
                    state=NodeState.ACTIVE,
                    latency_ms=p.latency_ms,
                    volatility_score=vol,
                    last_heartbeat_seq=0,
                    missed_heartbeats=0,
                    auth_token_hash=p.token_hash,
                ),
                last_heartbeat_at=at,
                day_count=day,
            )
        elif isinstance(p, ev.NodeStateChanged):
            self._nodes[p.node_id].record.state = p.state
        elif isinstance(p, ev.HeartbeatAccepted):
            info = self._nodes[p.node_id]
            info.record.last_heartbeat_seq = p.seq
            info.record.missed_heartbeats = 0
            info.last_heartbeat_at = at
            info.directives.clear()
            for sample in p.telemetry:
                self._telemetry_latest[(p.node_id.value, sample.gpu_index)] = sample
        elif isinstance(p, ev.HeartbeatMissed):
            info = self._nodes[p.node_id]
            self.counters["heartbeat_misses_total"] += p.missed - info.record.missed_heartbeats
            info.record.missed_heartbeats = p.missed
        elif isinstance(p, ev.JobEnqueued):
            self._jobs[p.job_id] = JobRecord(
                job_id=p.job_id, spec=p.spec, state=JobState.PENDING, enqueue_seq=p.enqueue_seq
            )
            self._enqueue_counter = max(self._enqueue_counter, p.enqueue_seq + 1)
        elif isinstance(p, ev.JobStateChanged):
            self._jobs[p.job_id].state = p.state
        elif isinstance(p, ev.AllocationGranted):
            a = p.allocation
            info = self._nodes[a.node_id]
            for idx in a.gpu_indices:
                info.busy[idx] = a.job_id
            self._jobs[a.job_id].allocations.append(a)
            all_sorted = sorted(self._nodes)
            self._rr_cursor = advance_cursor(a.node_id, all_sorted)
        elif isinstance(p, ev.AllocationReleased):
            info = self._nodes[p.node_id]
            for idx in [i for i, j in info.busy.items() if j == p.job_id]:
                del info.busy[idx]
        elif isinstance(p, ev.CheckpointRecorded):
            m = p.manifest
            tail = self._chain_tails.get(m.job_id)
            if tail is None or m.seq > tail.seq:
                self._chain_tails[m.job_id] = m
            self.counters["checkpoint_bytes_total"] += m.payload_bytes
        elif isinstance(p, ev.MigrationStarted):
            self.counters["migrations_total"] += 1
        elif isinstance(p, ev.MigrationCompleted):
            pass
        elif isinstance(p, ev.AffinitySet):
            job = self._jobs[p.job_id]
            job.affinity_node = p.node_id
            job.affinity_expires_at = p.expires_at
        elif isinstance(p, ev.InterruptionRecorded):
            self._nodes[p.node_id].day_count += 1
        elif isinstance(p, ev.DayRolled):
            info = self._nodes[p.node_id]
            alpha = self.config.ewma_alpha
            info.record.volatility_score = (
                (1 - alpha) * info.record.volatility_score + alpha * info.day_count
            )
            info.day_count = 0
        elif isinstance(p, ev.JobCancelled):
            self._jobs[p.job_id].state = JobState.FAILED
        elif isinstance(p, ev.DirectiveQueued):
            self._nodes[p.node_id].directives.append(dict(p.directive))
        else:  # pragma: no cover
            raise TypeError(f"unknown payload {type(p)!r}")

    # ------------------------------------------------------------------
    # node lifecycle

    def register_node(
        self,
        gpus: Sequence[GpuDescriptor],
        latency_ms: float,
        prior_id: NodeId | None = None,
    ) -> tuple[NodeRecord, str]:
        """Admit a node; fresh bearer token issued, only its hash persisted.

        Re-registration with a known id preserves volatility history.
        """
        if not gpus:
            raise EmptyGpuList("a node must advertise at least one GPU")
        rejoined = False
        if prior_id is not None and prior_id in self._nodes:
            state = self._nodes[prior_id].record.state
            if state in (NodeState.REGISTERING, NodeState.ACTIVE, NodeState.PAUSED, NodeState.DRAINING):
                raise DuplicateActiveNode(f"node {prior_id} is already {state.value}")
            rejoined = True
        node_id = prior_id or NodeId.generate(self._rng)
        token = (
            f"{self._rng.getrandbits(128):032x}" if self._rng is not None else secrets.token_hex(16)
        )
        self._record(
            ev.NodeRegistered(
                node_id=node_id,
                gpus=tuple(gpus),
                latency_ms=latency_ms,
                token_hash=token_hash(token),
                rejoined=rejoined,
            )
        )
        return self.node_record(node_id), token

    def _info(self, node_id: NodeId) -> _NodeInfo:
        info = self._nodes.get(node_id)
        if info is None:
            raise UnknownNode(f"unknown node {node_id}")
        return info

    def process_heartbeat(
        self,
        node_id: NodeId,
        seq: int,
        token: str,
        telemetry: Sequence[GpuTelemetry] = (),
        reports: Sequence[dict] = (),
    ) -> dict[str, Any]:
        """Accept a status update; the ack carries queued coordinator directives."""
        info = self._info(node_id)
        if info.record.state is NodeState.DEPARTED:
            raise UnknownNode(f"node {node_id} has departed")
        if token_hash(token) != info.record.auth_token_hash:
            raise Unauthorized("bad bearer token")
        if seq <= info.record.last_heartbeat_seq:
            # Duplicate delivery tolerance: rejected but not counted as a miss.
            raise StaleSequence(f"seq {seq} <= {info.record.last_heartbeat_seq}")
        reconnected = info.record.state is NodeState.UNAVAILABLE
        if reconnected:
            self._record(
                ev.NodeStateChanged(
                    node_id, node_transition(info.record.state, NodeEvent.RECONNECT), "reconnect"
                )
            )
        directives = list(info.directives)
        self._record(ev.HeartbeatAccepted(node_id, seq, tuple(telemetry)))
        for rep in reports:
            self._apply_report(node_id, rep)
        return {
            "ack": True,
            "directives": directives,
            "node_state": info.record.state.value,
            "return_migration_check": reconnected,
        }

    def _apply_report(self, node_id: NodeId, rep: dict) -> None:
        kind = rep.get("kind")
        if kind == "checkpointed":
            self._record(ev.CheckpointRecorded(manifest_from_wire(rep["manifest"])))
            return
        job = self._jobs.get(rep.get("job_id", ""))
        if job is None:
            return
        if kind == "launched" and job.state is JobState.SCHEDULED:
            self._record(ev.JobStateChanged(job.job_id, JobState.RUNNING, "launched"))
        elif kind == "completed" and job.state is JobState.RUNNING:
            self._record(ev.JobStateChanged(job.job_id, JobState.COMPLETED, "completed"))
            self._release_if_held(job, node_id)
        elif kind == "failed" and job.state in (JobState.SCHEDULED, JobState.RUNNING):
            self._record(
                ev.JobStateChanged(job.job_id, JobState.FAILED, rep.get("reason", "failed"))
            )
            self._release_if_held(job, node_id)
        # "terminated" reports are informational (stale container cleanup).

    def _release_if_held(self, job: JobRecord, node_id: NodeId) -> None:
        info = self._nodes.get(node_id)
        if info is not None and job.job_id in info.busy.values():
            self._record(ev.AllocationReleased(job.job_id, node_id))

    def detect_failures(self, now: int | None = None) -> list[NodeId]:
        """Mark nodes silent for >= 3 heartbeat intervals Unavailable; displace their jobs.

        Idempotent: safe to call at every scheduler tick. A silent Paused
        node is not exempt from liveness.
        """
        now = self.clock.now_ms() if now is None else now
        interval = self.config.heartbeat_interval_ms
        newly_unavailable: list[NodeId] = []
        for node_id in sorted(self._nodes):
            info = self._nodes[node_id]
            if info.record.state not in (NodeState.ACTIVE, NodeState.PAUSED):
                continue
            k = (now - info.last_heartbeat_at) // interval
            missed = min(int(k), self.config.miss_threshold)
            if missed <= info.record.missed_heartbeats:
                continue
            self._record(ev.HeartbeatMissed(node_id, missed))
            if missed >= self.config.miss_threshold:
                self._record(
                    ev.NodeStateChanged(
                        node_id,
                        node_transition(info.record.state, NodeEvent.HEARTBEAT_LOSS),
                        "heartbeat_loss",
                    )
                )
                self._record(ev.InterruptionRecorded(node_id, "heartbeat_loss"))
                newly_unavailable.append(node_id)
                for job_id in sorted(set(info.busy.values())):
                    self._displace(self._jobs[job_id], "heartbeat-loss", now)
                    # The node cannot be reached now; tell it to clean up the
                    # stale container when it reconnects.
                    self._record(
                        ev.DirectiveQueued(
                            node_id, {"kind": "terminate", "job_id": job_id, "grace_s": 0}
                        )
                    )
        return newly_unavailable

    def _displace(self, job: JobRecord, reason: str, now: int) -> None:
        assert job.current_allocation is not None
        from_node = job.current_allocation.node_id
        self._record(ev.MigrationStarted(job.job_id, from_node, reason))
        self._record(
            ev.JobStateChanged(job.job_id, job_transition(job.state, JobEvent.INTERRUPT), reason)
        )
        self._record(ev.AllocationReleased(job.job_id, from_node))
        expires = now + int(round(job.spec.affinity_window_s * 1000))
        self._record(ev.AffinitySet(job.job_id, from_node, expires))
        self._record(ev.JobStateChanged(job.job_id, JobState.PENDING, "requeue"))

    def pause_node(self, node_id: NodeId) -> None:
        info = self._info(node_id)
        self._record(
            ev.NodeStateChanged(node_id, node_transition(info.record.state, NodeEvent.PAUSE), "pause")
        )

    def resume_node(self, node_id: NodeId) -> None:
        info = self._info(node_id)
        self._record(
            ev.NodeStateChanged(node_id, node_transition(info.record.state, NodeEvent.RESUME), "resume")
        )

    def request_drain(self, node_id: NodeId, grace_s: float | None = None) -> None:
        """Coordinator-initiated drain: mark Draining and direct the agent to exit."""
        info = self._info(node_id)
        self._record(
            ev.NodeStateChanged(node_id, node_transition(info.record.state, NodeEvent.DRAIN), "drain")
        )
        self._record(
            ev.DirectiveQueued(
                node_id,
                {"kind": "drain", "grace_s": grace_s if grace_s is not None else self.config.grace_default_s},
            )
        )

    def queue_directive(self, node_id: NodeId, directive: dict) -> None:
        self._info(node_id)
        self._record(ev.DirectiveQueued(node_id, dict(directive)))

    def handle_departure(
        self,
        node_id: NodeId,
        kind: str,
        final_manifests: Sequence[CheckpointManifest] = (),
    ) -> list[dict[str, Any]]:
        """Process a provider exit; returns the migration plan for displaced jobs.

        Graceful exits arrive with the final checkpoints created during the
        grace period, so migrated jobs lose no work past the last delta.
        Emergency exits fall back to each job's latest recorded checkpoint,
        or a stateless re-queue when none exists.
        """
        if kind not in ("graceful", "emergency"):
            raise ValueError("departure kind must be graceful or emergency")
        info = self._info(node_id)
        now = self.clock.now_ms()
        for manifest in final_manifests:
            self._record(ev.CheckpointRecorded(manifest))
        displaced = sorted(set(info.busy.values()))
        self._record(ev.InterruptionRecorded(node_id, f"{kind}-departure"))
        if kind == "graceful":
            if info.record.state in (NodeState.ACTIVE, NodeState.PAUSED):
                self._record(
                    ev.NodeStateChanged(
                        node_id, node_transition(info.record.state, NodeEvent.DRAIN), "drain"
                    )
                )
            for job_id in displaced:
                self._displace(self._jobs[job_id], "graceful-departure", now)
            self._record(
                ev.NodeStateChanged(
                    node_id, node_transition(info.record.state, NodeEvent.DEPART), "departed"
                )
            )
        else:
            for job_id in displaced:
                self._displace(self._jobs[job_id], "emergency-departure", now)
            self._record(
                ev.NodeStateChanged(
                    node_id,
                    node_transition(info.record.state, NodeEvent.FORCE_DEPART),
                    "emergency-departure",
                )
            )
        plan = []
        for job_id in displaced:
            tail = self._chain_tails.get(job_id)
            plan.append(
                {
                    "job_id": job_id,
                    "action": "requeue",
                    "affinity_node": node_id.value,
                    "latest_checkpoint_seq": tail.seq if tail else None,
                }
            )
        return plan

    def update_volatility(self, node_id: NodeId, event: str) -> float:
        """EWMA over daily interruption counts: score <- (1-a)*score + a*count."""
        self._info(node_id)
        if event == "interruption":
            self._record(ev.InterruptionRecorded(node_id, "manual"))
        elif event == "day-elapsed":
            self._record(ev.DayRolled(node_id))
        else:
            raise ValueError("event must be 'interruption' or 'day-elapsed'")
        return self._nodes[node_id].record.volatility_score

    # ------------------------------------------------------------------
    # jobs and scheduling

    def enqueue_job(self, spec: JobSpec, job_id: str | None = None) -> str:
        validate_job_spec(spec, self.config.allow_list)
        job_id = job_id or new_job_id(self._rng)
        self._record(ev.JobEnqueued(job_id, spec, self._enqueue_counter))
        return job_id

    def _pending_jobs(self) -> list[JobRecord]:
        pending = [j for j in self._jobs.values() if j.state is JobState.PENDING]
        pending.sort(key=lambda j: (-j.spec.priority, j.enqueue_seq))
        return pending

    def _candidate_view(self, info: _NodeInfo) -> CandidateNode:
        free = tuple(g for g in info.record.gpus if g.index not in info.busy)
        return CandidateNode(
            node_id=info.record.id,
            state=info.record.state,
            latency_ms=info.record.latency_ms,
            volatility_score=info.record.volatility_score,
            free_gpus=free,
        )

    def cluster_snapshot(self) -> list[CandidateNode]:
        return [self._candidate_view(self._nodes[nid]) for nid in sorted(self._nodes)]

    def schedule_tick(self, now: int | None = None) -> list[Allocation]:
        """One pass over the pending queue: filter, score, allocate.

        Jobs carrying an unexpired affinity tag to a now-Active node bypass
        scoring and return to that node when it passes the constraint
        filter. Unfilled jobs simply remain Pending.
        """
        now = self.clock.now_ms() if now is None else now
        granted: list[Allocation] = []
        for job in self._pending_jobs():
            chosen: NodeId | None = None
            if job.affinity_active(now):
                origin = self._nodes.get(job.affinity_node)
                if origin is not None and origin.record.state is NodeState.ACTIVE:
                    view = self._candidate_view(origin)
                    if filter_candidates(job.spec, [view]) and self._allowed(job, view.node_id):
                        chosen = view.node_id
            if chosen is None:
                views = [
                    self._candidate_view(self._nodes[nid])
                    for nid in sorted(self._nodes)
                    if self._nodes[nid].record.state is NodeState.ACTIVE
                    and self._allowed(job, nid)
                ]
                chosen = choose_node(
                    job.spec,
                    views,
                    self.config.weight_volatility,
                    self.config.weight_latency,
                    sorted(self._nodes),
                    self._rr_cursor,
                )
            if chosen is None:
                continue
            gpu = eligible_gpu(self._candidate_view(self._nodes[chosen]), job.spec)
            assert gpu is not None
            was_migration = bool(job.allocations)
            alloc = Allocation(job.job_id, chosen, (gpu.index,), now)
            self._record(ev.AllocationGranted(alloc))
            self._record(ev.JobStateChanged(job.job_id, JobState.SCHEDULED, "allocated"))
            if was_migration:
                self._record(ev.MigrationCompleted(job.job_id, chosen))
            tail = self._chain_tails.get(job.job_id)
            self._record(
                ev.DirectiveQueued(
                    chosen,
                    {
                        "kind": "launch",
                        "job_id": job.job_id,
                        "spec": job_spec_to_wire(job.spec),
                        "gpu_indices": list(alloc.gpu_indices),
                        "restore": tail is not None,
                    },
                )
            )
            granted.append(alloc)
        return granted

    def _allowed(self, job: JobRecord, node_id: NodeId) -> bool:
        return self._eligibility is None or self._eligibility(job, node_id)

    def cancel_job(self, job_id: str) -> None:
        job = self._jobs.get(job_id)
        if job is None:
            raise UnknownJob(f"unknown job {job_id}")
        if job.state not in (JobState.PENDING, JobState.SCHEDULED, JobState.RUNNING):
            raise IllegalTransition(job.state, JobEvent.FAIL)
        alloc = job.current_allocation
        if job.state in (JobState.SCHEDULED, JobState.RUNNING) and alloc is not None:
            self._record(
                ev.DirectiveQueued(
                    alloc.node_id, {"kind": "terminate", "job_id": job_id, "grace_s": 0}
                )
            )
            self._record(ev.AllocationReleased(job_id, alloc.node_id))
        self._record(ev.JobCancelled(job_id))

    # ------------------------------------------------------------------
    # read model

    def node_record(self, node_id: NodeId) -> NodeRecord:
        r = self._info(node_id).record
        return NodeRecord(
            id=r.id,
            gpus=list(r.gpus),
            state=r.state,
            latency_ms=r.latency_ms,
            volatility_score=r.volatility_score,
            last_heartbeat_seq=r.last_heartbeat_seq,
            missed_heartbeats=r.missed_heartbeats,
            auth_token_hash=r.auth_token_hash,
        )

    def list_nodes(self) -> list[NodeRecord]:
        return [self.node_record(nid) for nid in sorted(self._nodes)]

    def get_job(self, job_id: str) -> JobRecord:
        job = self._jobs.get(job_id)
        if job is None:
            raise UnknownJob(f"unknown job {job_id}")
        return job

    def list_jobs(self) -> list[JobRecord]:
        return [self._jobs[jid] for jid in sorted(self._jobs)]

    def job_checkpoint_tail(self, job_id: str) -> CheckpointManifest | None:
        return self._chain_tails.get(job_id)

    def node_busy_map(self, node_id: NodeId) -> dict[int, str]:
        return dict(self._info(node_id).busy)

    def pending_directive_count(self, node_id: NodeId) -> int:
        info = self._nodes.get(node_id)
        return len(info.directives) if info is not None else 0

    def has_node(self, node_id: NodeId) -> bool:
        return node_id in self._nodes

    def recent_events(self, since_seq: int = 0, limit: int = 500) -> list[ev.EventLogEntry]:
        return self.log[since_seq : since_seq + limit]

    def cluster_summary(self) -> dict[str, Any]:
        node_states: dict[str, int] = {}
        for info in self._nodes.values():
            node_states[info.record.state.value] = node_states.get(info.record.state.value, 0) + 1
        job_states: dict[str, int] = {}
        for job in self._jobs.values():
            job_states[job.state.value] = job_states.get(job.state.value, 0) + 1
        total_gpus = sum(len(i.record.gpus) for i in self._nodes.values())
        busy_gpus = sum(len(i.busy) for i in self._nodes.values())
        return {
            "nodes": node_states,
            "jobs": job_states,
            "total_gpus": total_gpus,
            "busy_gpus": busy_gpus,
            "counters": dict(self.counters),
        }

    def metrics(self) -> dict[str, float]:
        running = sum(1 for j in self._jobs.values() if j.state is JobState.RUNNING)
        utils = [t.util_pct for t in self._telemetry_latest.values()]
        return {
            "gpu_util_pct": sum(utils) / len(utils) if utils else 0.0,
            "jobs_running": float(running),
            "migrations_total": float(self.counters["migrations_total"]),
            "heartbeat_misses_total": float(self.counters["heartbeat_misses_total"]),
            "checkpoint_bytes_total": float(self.counters["checkpoint_bytes_total"]),
        }

    def render_metrics(self) -> str:
        lines = [f"{name} {value:g}" for name, value in sorted(self.metrics().items())]
        return "\n".join(lines) + "\n"

    def snapshot(self) -> dict[str, Any]:
        """Comparable view of the full state, used for replay-equality checks."""
        return {
            "nodes": {
                nid.value: {
                    "record": node_record_to_wire(info.record),
                    "busy": {str(k): v for k, v in sorted(info.busy.items())},
                    "day_count": info.day_count,
                    "last_heartbeat_at": info.last_heartbeat_at,
                    "directives": list(info.directives),
                }
                for nid, info in sorted(self._nodes.items())
            },
            "jobs": {jid: job_record_to_wire(j) for jid, j in sorted(self._jobs.items())},
            "pending": [j.job_id for j in self._pending_jobs()],
            "rr_cursor": self._rr_cursor,
            "enqueue_counter": self._enqueue_counter,
            "counters": dict(self.counters),
            "chain_tails": {jid: m.seq for jid, m in sorted(self._chain_tails.items())},
            "telemetry": {
                f"{n}:{g}": telemetry_to_wire(t)
                for (n, g), t in sorted(self._telemetry_latest.items())
            },
        }


def iter_allocated_jobs(coord: Coordinator) -> Iterable[tuple[NodeId, str]]:
    for node in coord.list_nodes():
        for _, job_id in sorted(coord.node_busy_map(node.id).items()):
            yield node.id, job_id
