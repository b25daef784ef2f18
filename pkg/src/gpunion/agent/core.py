"""Provider agent: registration, heartbeating, workload lifecycle, kill-switch.

Provider supremacy is the governing rule here: pause, drain, and the
kill-switch are local decisions that never require the coordinator to be
reachable. Coordinator commands arrive as directives on heartbeat acks.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

from gpunion.agent.config import AgentConfig
from gpunion.agent.runtime import RuntimeAdapter, SimulatedRuntime, WorkloadPhase
from gpunion.agent.telemetry import TelemetryProbe
from gpunion.agent.transport import Transport
from gpunion.clock import Clock
from gpunion.domain.ids import NodeId
from gpunion.domain.types import CheckpointManifest, GpuDescriptor, JobSpec
from gpunion.domain.wire import job_spec_from_wire, manifest_to_wire
from gpunion.errors import (
    CoordinatorUnreachable,
    DigestMismatch,
    GpunionError,
    ProbeUnavailable,
    RuntimeFailure,
    StaleSequence,
    StorageTargetUnavailable,
)
from gpunion.resilience.checkpoints import (
    CheckpointPolicy,
    WorkloadStateModel,
    create_checkpoint,
    estimate_restore_downtime_ms,
    restore_latest,
)
from gpunion.resilience.store import BandwidthLedger, CheckpointStore


@dataclass
class WorkloadHandle:
    job_id: str
    container_id: str
    gpu_indices: tuple[int, ...]
    spec: JobSpec
    phase: WorkloadPhase
    next_checkpoint_at: int
    checkpoint_generation: int = 0


@dataclass
class DepartureReport:
    started_at: int
    completed_at: int
    # (at_ms, job_id, "checkpointed" | "terminated")
    events: list[tuple[int, str, str]] = field(default_factory=list)
    manifests: list[CheckpointManifest] = field(default_factory=list)
    notified: bool = False


class Agent:
    def __init__(
        self,
        config: AgentConfig,
        runtime: RuntimeAdapter,
        probe: TelemetryProbe,
        transport: Transport,
        clock: Clock,
        store: CheckpointStore,
        ledger: BandwidthLedger | None = None,
    ) -> None:
        self.config = config
        self.runtime = runtime
        self.probe = probe
        self.transport = transport
        self.clock = clock
        self.store = store
        self.ledger = ledger
        self.node_id: NodeId | None = None
        self.token: str | None = None
        self.alive = False
        self.workloads: dict[str, WorkloadHandle] = {}
        self._hb_seq = 0
        self._next_hb_at = 0
        self._reports: list[dict] = []
        self._uplink_free_at_ms = 0

    # ------------------------------------------------------------------
    # identity & registration

    def _identity_path(self) -> Path:
        return self.config.state_dir / "node_id"

    def _token_path(self) -> Path:
        return self.config.state_dir / "token"

    def load_identity(self) -> NodeId | None:
        p = self._identity_path()
        if p.exists():
            return NodeId(p.read_text().strip())
        return None

    def join(
        self,
        gpus: Sequence[GpuDescriptor],
        max_attempts: int = 8,
        max_backoff_s: float = 60.0,
        sleep: Callable[[float], None] | None = None,
    ) -> NodeId:
        """Register with the coordinator, retrying with capped exponential backoff.

        The node identity is loaded from the state dir when present so the
        same machine keeps its id (and its volatility history) across
        restarts.
        """
        sleep = sleep or time.sleep
        self.config.state_dir.mkdir(parents=True, exist_ok=True)
        prior = self.load_identity()
        last_exc: Exception | None = None
        for attempt in range(max_attempts):
            try:
                out = self.transport.register(list(gpus), self.config.latency_ms, prior)
                break
            except CoordinatorUnreachable as exc:
                last_exc = exc
                if attempt == max_attempts - 1:
                    raise
                sleep(min(2.0**attempt, max_backoff_s))
        else:  # pragma: no cover
            raise CoordinatorUnreachable(str(last_exc))
        self.node_id = NodeId(out["node_id"])
        self.token = out["token"]
        # heartbeat cadence is the coordinator's contract, not ours
        if "heartbeat_interval_s" in out:
            self.config.heartbeat_interval_s = float(out["heartbeat_interval_s"])
        self._identity_path().write_text(self.node_id.value + "\n")
        self._token_path().write_text(self.token + "\n")
        self.alive = True
        self._hb_seq = 0
        self._next_hb_at = self.clock.now_ms()
        self._log(f"joined as {self.node_id}")
        return self.node_id

    def _log(self, message: str) -> None:
        try:
            with (self.config.state_dir / "agent.log").open("a") as fh:
                fh.write(f"{self.clock.now_ms()} {message}\n")
        except OSError:
            pass

    # ------------------------------------------------------------------
    # heartbeat loop

    def tick(self, now: int | None = None) -> dict | None:
        now = self.clock.now_ms() if now is None else now
        if self.alive and now >= self._next_hb_at:
            return self.heartbeat()
        return None

    def heartbeat(self) -> dict | None:
        """Send one status update and execute any directives in the ack.

        Telemetry is best-effort: a failing probe never suppresses the
        heartbeat. Failed sends keep pending reports for retry.
        """
        if not self.alive or self.node_id is None or self.token is None:
            return None
        now = self.clock.now_ms()
        self._hb_seq += 1
        try:
            telemetry = self.probe.sample(self.node_id)
        except ProbeUnavailable:
            telemetry = []
        sent = list(self._reports)
        try:
            ack = self.transport.heartbeat(self.node_id, self._hb_seq, self.token, telemetry, sent)
        except StaleSequence:
            self._next_hb_at = now + self.config.heartbeat_interval_ms
            return None
        except GpunionError:
            self._next_hb_at = now + self.config.heartbeat_interval_ms
            return None
        del self._reports[: len(sent)]
        self._next_hb_at = now + self.config.heartbeat_interval_ms
        for directive in ack.get("directives", []):
            self.execute_directive(directive)
        return ack

    def pump(self) -> dict | None:
        """Force an immediate heartbeat (directive pickup)."""
        return self.heartbeat()

    @property
    def pending_report_count(self) -> int:
        return len(self._reports)

    # ------------------------------------------------------------------
    # directives

    def execute_directive(self, directive: dict) -> None:
        kind = directive.get("kind")
        if kind == "launch":
            self._launch(directive)
        elif kind == "checkpoint":
            self.checkpoint_workload(directive["job_id"])
        elif kind == "terminate":
            self._terminate(directive["job_id"], directive.get("grace_s", 0))
        elif kind == "drain":
            self.drain(directive.get("grace_s"))
        elif kind == "kill":
            self.kill_switch(directive.get("grace_s", 0))

    def _launch(self, directive: dict) -> None:
        job_id = directive["job_id"]
        spec = job_spec_from_wire(directive["spec"])
        now = self.clock.now_ms()
        try:
            self.runtime.pull_verify(spec.image_ref, spec.image_digest)
        except DigestMismatch as exc:
            self._reports.append({"kind": "failed", "job_id": job_id, "reason": str(exc)})
            return
        progress_ms = 0
        ready_at = now
        if directive.get("restore"):
            try:
                restored = restore_latest(self.store, job_id, spec.storage_target)
                progress_ms = restored.progress_ms
                downtime = estimate_restore_downtime_ms(
                    restored.transfer_bytes,
                    self.config.link_bandwidth_mbps,
                    self.config.restore_overhead_s,
                )
                ready_at = now + downtime
                if self.ledger is not None:
                    self.ledger.record(
                        now,
                        restored.transfer_bytes,
                        self.config.link_bandwidth_mbps,
                        "restore",
                        job_id,
                    )
            except GpunionError:
                # Nothing verifiable: relaunch stateless from scratch.
                progress_ms = 0
                ready_at = now
        try:
            cid = self.runtime.launch(
                job_id,
                spec.image_ref,
                spec.image_digest,
                tuple(directive["gpu_indices"]),
                spec.gpu_memory_mib_required,
                progress_base_ms=progress_ms,
                ready_at_ms=ready_at,
            )
        except RuntimeFailure as exc:
            self._reports.append({"kind": "failed", "job_id": job_id, "reason": str(exc)})
            return
        self.workloads[job_id] = WorkloadHandle(
            job_id=job_id,
            container_id=cid,
            gpu_indices=tuple(directive["gpu_indices"]),
            spec=spec,
            phase=WorkloadPhase.RUNNING,
            next_checkpoint_at=ready_at + int(round(spec.checkpoint_interval_s * 1000)),
        )
        self._reports.append({"kind": "launched", "job_id": job_id})

    def _terminate(self, job_id: str, grace_s: float) -> None:
        handle = self.workloads.get(job_id)
        if handle is None:
            self._reports.append({"kind": "terminated", "job_id": job_id})
            return
        if grace_s > 0 and handle.phase is WorkloadPhase.RUNNING:
            self.checkpoint_workload(job_id)
        self.runtime.terminate(handle.container_id, grace_s)
        del self.workloads[job_id]
        self._reports.append({"kind": "terminated", "job_id": job_id})

    # ------------------------------------------------------------------
    # checkpointing

    def checkpoint_workload(self, job_id: str, force_mode=None) -> CheckpointManifest | None:
        """Capture a checkpoint for one workload; skipped (and retried next
        interval) when the storage target is unavailable."""
        handle = self.workloads.get(job_id)
        if handle is None:
            return None
        now = self.clock.now_ms()
        interval_ms = int(round(handle.spec.checkpoint_interval_s * 1000))
        try:
            progress_ms, _cost_s = self.runtime.checkpoint(handle.container_id)
        except RuntimeFailure:
            return None
        model = self._state_model(job_id)
        policy = CheckpointPolicy(handle.spec.checkpoint_interval_s, handle.spec.checkpoint_mode)
        handle.phase = WorkloadPhase.CHECKPOINTING
        try:
            manifest = create_checkpoint(
                self.store,
                job_id,
                policy,
                handle.spec.storage_target,
                model,
                progress_ms,
                now,
                force_mode=force_mode,
            )
        except StorageTargetUnavailable:
            handle.phase = WorkloadPhase.RUNNING
            handle.next_checkpoint_at = now + interval_ms
            handle.checkpoint_generation += 1
            return None
        handle.phase = WorkloadPhase.RUNNING
        handle.next_checkpoint_at = now + interval_ms
        handle.checkpoint_generation += 1
        if self.ledger is not None:
            # concurrent captures queue on the node's single uplink
            start = max(now, self._uplink_free_at_ms)
            self._uplink_free_at_ms = self.ledger.record(
                start, manifest.payload_bytes, self.config.link_bandwidth_mbps, "backup", job_id
            )
        self._reports.append({"kind": "checkpointed", "manifest": manifest_to_wire(manifest)})
        return manifest

    def _state_model(self, job_id: str) -> WorkloadStateModel:
        if isinstance(self.runtime, SimulatedRuntime):
            m = self.runtime.model_for(job_id)
            return WorkloadStateModel(m.total_state_bytes, m.dirty_fraction)
        return WorkloadStateModel(2**30, 0.10)

    def complete_workload(self, job_id: str) -> None:
        """Mark a workload finished (simulated completion event)."""
        handle = self.workloads.get(job_id)
        if handle is None:
            return
        self.runtime.terminate(handle.container_id)
        del self.workloads[job_id]
        self._reports.append({"kind": "completed", "job_id": job_id})

    # ------------------------------------------------------------------
    # provider supremacy controls

    def kill_switch(
        self, grace_s: float, allow_checkpoint: bool = True, kind: str | None = None
    ) -> DepartureReport:
        """Terminate everything locally within the grace period.

        Never fails from the provider's perspective: the departure notice is
        fire-and-forget and an unreachable coordinator changes nothing about
        local termination.
        """
        now = self.clock.now_ms()
        report = DepartureReport(started_at=now, completed_at=now)
        deadline = now + int(round(grace_s * 1000))
        done_at = now
        if allow_checkpoint and grace_s > 0:
            for job_id in sorted(self.workloads):
                handle = self.workloads[job_id]
                cost_ms = int(round(self._checkpoint_cost_s(job_id) * 1000))
                if done_at + cost_ms > deadline:
                    continue
                manifest = self.checkpoint_workload(job_id)
                if manifest is not None:
                    done_at += cost_ms
                    report.manifests.append(manifest)
                    report.events.append((done_at, job_id, "checkpointed"))
        for job_id in sorted(self.workloads):
            handle = self.workloads[job_id]
            term_at = done_at if grace_s > 0 else now
            self.runtime.terminate(handle.container_id)
            report.events.append((term_at, job_id, "terminated"))
        self.workloads.clear()
        report.completed_at = max([at for at, _, _ in report.events], default=now)
        notice_kind = kind or ("graceful" if report.manifests else "emergency")
        if self.node_id is not None:
            try:
                self.transport.departure(
                    self.node_id, notice_kind, report.manifests, timeout_s=2.0
                )
                report.notified = True
            except GpunionError:
                report.notified = False
        self.alive = False
        self._log(f"kill-switch grace={grace_s}s events={len(report.events)}")
        return report

    def _checkpoint_cost_s(self, job_id: str) -> float:
        if isinstance(self.runtime, SimulatedRuntime):
            return self.runtime.model_for(job_id).checkpoint_cost_s
        return 5.0

    def drain(self, grace_s: float | None = None) -> DepartureReport:
        """Graceful departure: checkpoint all workloads, notify, stop loops."""
        grace = grace_s if grace_s is not None else self.config.grace_default_s
        return self.kill_switch(grace, allow_checkpoint=True, kind="graceful")

    def pause(self) -> None:
        if self.node_id is None:
            raise CoordinatorUnreachable("not registered")
        self.transport.pause(self.node_id)

    def resume(self) -> None:
        if self.node_id is None:
            raise CoordinatorUnreachable("not registered")
        self.transport.resume(self.node_id)

    # ------------------------------------------------------------------
    # simulated failure injection

    def crash(self) -> None:
        """Abrupt machine failure: containers die, heartbeats stop, no notice."""
        for handle in self.workloads.values():
            try:
                self.runtime.kill(handle.container_id)
            except (RuntimeFailure, AttributeError):
                pass
        self.workloads.clear()
        self.alive = False

    def suspend(self) -> None:
        """Network loss: stop heartbeating but keep local state (temporary)."""
        self.alive = False

    def resume_connectivity(self) -> None:
        self.alive = True
        self._next_hb_at = self.clock.now_ms()
