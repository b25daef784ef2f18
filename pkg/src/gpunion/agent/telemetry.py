"""GPU telemetry probes.

Real NVML probing is out of scope for the reference build; the probe
interface mirrors what a PyNVML-backed implementation would return and the
simulated probe derives plausible numbers from the simulated runtime.
A probe failure never blocks a heartbeat: the agent sends empty telemetry.
"""

from __future__ import annotations

from typing import Protocol

from gpunion.clock import Clock
from gpunion.domain.ids import NodeId
from gpunion.domain.types import GpuDescriptor, GpuTelemetry
from gpunion.errors import ProbeUnavailable


class TelemetryProbe(Protocol):
    def sample(self, node_id: NodeId) -> list[GpuTelemetry]: ...


class SimulatedProbe:
    BUSY_UTIL_PCT = 90.0
    IDLE_TEMP_C = 35
    BUSY_TEMP_C = 72
    IDLE_POWER_W = 25.0
    BUSY_POWER_W = 240.0

    def __init__(self, gpus: list[GpuDescriptor], runtime, clock: Clock) -> None:
        self.gpus = gpus
        self.runtime = runtime
        self.clock = clock

    def sample(self, node_id: NodeId) -> list[GpuTelemetry]:
        now = self.clock.now_ms()
        busy = self.runtime.busy_gpu_indices()
        mem_by_gpu: dict[int, int] = {}
        for c in self.runtime.containers():
            if not c.exited:
                for idx in c.gpu_indices:
                    mem_by_gpu[idx] = mem_by_gpu.get(idx, 0) + c.mem_used_mib
        out = []
        for gpu in self.gpus:
            active = gpu.index in busy
            out.append(
                GpuTelemetry(
                    node=node_id,
                    gpu_index=gpu.index,
                    util_pct=self.BUSY_UTIL_PCT if active else 0.0,
                    mem_used_mib=min(mem_by_gpu.get(gpu.index, 0), gpu.memory_mib),
                    temp_c=self.BUSY_TEMP_C if active else self.IDLE_TEMP_C,
                    power_w=self.BUSY_POWER_W if active else self.IDLE_POWER_W,
                    sampled_at=now,
                )
            )
        return out


class FailingProbe:
    """Probe that is never available; used to test liveness decoupling."""

    def sample(self, node_id: NodeId) -> list[GpuTelemetry]:
        raise ProbeUnavailable("no GPU telemetry source")
