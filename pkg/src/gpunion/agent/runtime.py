"""Workload runtime adapters.

The runtime interface is the seam between the agent and whatever actually
executes containers. The simulated runtime is the reference implementation:
it models a workload as (duration, state size, dirty fraction, checkpoint
cost) and is fully deterministic under an injected clock, which is what the
churn simulator and the test suite run against. A real OCI-runtime adapter
can be slotted in behind the same interface.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Protocol

from gpunion.clock import Clock
from gpunion.errors import DigestMismatch, RuntimeFailure


class WorkloadPhase(Enum):
    STARTING = "starting"
    RUNNING = "running"
    CHECKPOINTING = "checkpointing"
    TERMINATING = "terminating"
    EXITED = "exited"


class RuntimeAdapter(Protocol):
    def pull_verify(self, image_ref: str, digest: str) -> None: ...
    def launch(
        self,
        job_id: str,
        image_ref: str,
        digest: str,
        gpu_indices: tuple[int, ...],
        mem_used_mib: int,
        progress_base_ms: int = 0,
        ready_at_ms: int | None = None,
    ) -> str: ...
    def checkpoint(self, container_id: str) -> tuple[int, float]: ...
    def terminate(self, container_id: str, grace_s: float = 0.0) -> None: ...
    def status(self, container_id: str) -> WorkloadPhase: ...


@dataclass
class SimWorkloadModel:
    """Time/size model of one simulated workload."""

    duration_s: float
    total_state_bytes: int
    dirty_fraction: float = 0.10
    checkpoint_base_s: float = 5.0
    checkpoint_per_gib_s: float = 1.0

    @property
    def duration_ms(self) -> int:
        return int(round(self.duration_s * 1000))

    @property
    def checkpoint_cost_s(self) -> float:
        return self.checkpoint_base_s + self.checkpoint_per_gib_s * self.total_state_bytes / 2**30


DEFAULT_MODEL = SimWorkloadModel(duration_s=3600.0, total_state_bytes=2**30)


@dataclass
class SimContainer:
    container_id: str
    job_id: str
    image_ref: str
    digest: str
    gpu_indices: tuple[int, ...]
    mem_used_mib: int
    model: SimWorkloadModel
    progress_base_ms: int
    ready_at_ms: int
    exited: bool = False
    exit_code: int | None = None
    phase: WorkloadPhase = WorkloadPhase.STARTING


class SimulatedRuntime:
    """Deterministic in-memory runtime.

    Progress equals wall time while a container is computing; a container
    restored from a checkpoint starts computing at ``ready_at_ms`` (after
    the modeled transfer) from its restored progress marker.
    """

    def __init__(
        self,
        clock: Clock,
        trusted_images: dict[str, str] | None = None,
    ) -> None:
        self.clock = clock
        # ref -> content digest of what a pull would actually fetch
        self.trusted_images = trusted_images or {}
        self.models: dict[str, SimWorkloadModel] = {}
        self._containers: dict[str, SimContainer] = {}
        self._counter = 0

    def register_model(self, job_id: str, model: SimWorkloadModel) -> None:
        self.models[job_id] = model

    def model_for(self, job_id: str) -> SimWorkloadModel:
        return self.models.get(job_id, DEFAULT_MODEL)

    # -- adapter interface ------------------------------------------------

    def pull_verify(self, image_ref: str, digest: str) -> None:
        """Simulated pull: the registry's content hash must match the request."""
        actual = self.trusted_images.get(image_ref, digest)
        if actual != digest:
            raise DigestMismatch(f"{image_ref}: registry digest {actual} != requested {digest}")

    def launch(
        self,
        job_id: str,
        image_ref: str,
        digest: str,
        gpu_indices: tuple[int, ...],
        mem_used_mib: int,
        progress_base_ms: int = 0,
        ready_at_ms: int | None = None,
    ) -> str:
        self._counter += 1
        cid = f"sim-{job_id}-{self._counter}"
        now = self.clock.now_ms()
        container = SimContainer(
            container_id=cid,
            job_id=job_id,
            image_ref=image_ref,
            digest=digest,
            gpu_indices=gpu_indices,
            mem_used_mib=mem_used_mib,
            model=self.model_for(job_id),
            progress_base_ms=progress_base_ms,
            ready_at_ms=ready_at_ms if ready_at_ms is not None else now,
        )
        container.phase = WorkloadPhase.RUNNING
        self._containers[cid] = container
        return cid

    def checkpoint(self, container_id: str) -> tuple[int, float]:
        """Copy-on-write capture: returns (progress marker ms, modeled cost s)."""
        c = self._get(container_id)
        if c.exited:
            raise RuntimeFailure(f"container {container_id} has exited")
        return self.progress_ms(container_id), c.model.checkpoint_cost_s

    def terminate(self, container_id: str, grace_s: float = 0.0) -> None:
        c = self._get(container_id)
        if not c.exited:
            # Freeze progress at termination time.
            c.progress_base_ms = self.progress_ms(container_id)
            c.ready_at_ms = self.clock.now_ms()
            c.exited = True
            c.exit_code = 0
            c.phase = WorkloadPhase.EXITED

    def kill(self, container_id: str) -> None:
        """Abrupt stop (simulated machine crash); progress since last durable point is gone."""
        c = self._get(container_id)
        if not c.exited:
            c.progress_base_ms = self.progress_ms(container_id)
            c.exited = True
            c.exit_code = 137
            c.phase = WorkloadPhase.EXITED

    def status(self, container_id: str) -> WorkloadPhase:
        return self._get(container_id).phase

    # -- simulation helpers -------------------------------------------------

    def _get(self, container_id: str) -> SimContainer:
        c = self._containers.get(container_id)
        if c is None:
            raise RuntimeFailure(f"unknown container {container_id}")
        return c

    def container(self, container_id: str) -> SimContainer:
        return self._get(container_id)

    def containers(self) -> list[SimContainer]:
        return [self._containers[c] for c in sorted(self._containers)]

    def progress_ms(self, container_id: str, now: int | None = None) -> int:
        c = self._get(container_id)
        now = self.clock.now_ms() if now is None else now
        if c.exited:
            return min(c.progress_base_ms, c.model.duration_ms)
        elapsed = max(0, now - c.ready_at_ms)
        return min(c.progress_base_ms + elapsed, c.model.duration_ms)

    def completion_at_ms(self, container_id: str) -> int:
        c = self._get(container_id)
        return c.ready_at_ms + (c.model.duration_ms - c.progress_base_ms)

    def busy_gpu_indices(self) -> set[int]:
        now = self.clock.now_ms()
        busy: set[int] = set()
        for c in self._containers.values():
            if not c.exited and c.ready_at_ms <= now:
                busy.update(c.gpu_indices)
        return busy

    def drop(self, container_id: str) -> None:
        self._containers.pop(container_id, None)
