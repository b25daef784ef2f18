"""Provider agent configuration."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path


@dataclass
class AgentConfig:
    state_dir: Path
    coordinator_url: str = ""
    heartbeat_interval_s: float = 10.0
    grace_default_s: float = 60.0
    runtime: str = "simulated"  # "simulated" | "oci"
    link_bandwidth_mbps: float = 1000.0
    restore_overhead_s: float = 5.0
    latency_ms: float = 1.0

    def __post_init__(self) -> None:
        self.state_dir = Path(self.state_dir)
        if self.heartbeat_interval_s <= 0:
            raise ValueError("heartbeat_interval_s must be positive")

    @property
    def heartbeat_interval_ms(self) -> int:
        return int(round(self.heartbeat_interval_s * 1000))
