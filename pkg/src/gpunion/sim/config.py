"""Simulation scenario configuration.

A scenario is a plain JSON document; field names here are the schema. The
same config drives both the shared-pool run and the static-ownership
baseline so utilization comparisons use identical traces.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from gpunion.domain.types import InterruptionKind, JobSpec
from gpunion.domain.wire import job_spec_from_wire, job_spec_to_wire
from gpunion.errors import InvalidConfig

KIND_KEYS = {
    InterruptionKind.SCHEDULED_DEPARTURE: "scheduled_departure",
    InterruptionKind.EMERGENCY_DEPARTURE: "emergency_departure",
    InterruptionKind.TEMPORARY_UNAVAILABILITY: "temporary_unavailability",
}


@dataclass
class SimNodeConfig:
    name: str
    gpu_count: int
    gpu_memory_mib: int
    compute_capability: tuple[int, int]
    latency_ms: float
    interruption_rate_per_day: float = 0.0
    gpu_model: str = "sim-gpu"

    def __post_init__(self) -> None:
        self.compute_capability = tuple(self.compute_capability)
        if self.gpu_count < 1:
            raise InvalidConfig(f"node {self.name}: gpu_count must be >= 1")
        if self.interruption_rate_per_day < 0:
            raise InvalidConfig(f"node {self.name}: negative interruption rate")


@dataclass
class SimWorkloadConfig:
    spec: JobSpec
    duration_s: float
    total_state_bytes: int
    dirty_fraction: float = 0.10
    arrival_s: float = 0.0
    owner: str = ""  # node name; used only by the static-ownership baseline

    def __post_init__(self) -> None:
        if self.duration_s <= 0:
            raise InvalidConfig("workload duration_s must be positive")


@dataclass
class SimConfig:
    seed: int
    nodes: list[SimNodeConfig]
    workloads: list[SimWorkloadConfig]
    kind_mix: dict[str, float]
    temporary_duration_mean_s: float
    link_bandwidth_mbps: float
    campus_bandwidth_mbps: float
    sim_duration_s: float
    heartbeat_interval_s: float = 10.0
    grace_s: float = 60.0
    # scheduled/emergency departures return to the pool after this delay;
    # 0 means departed nodes stay gone.
    rejoin_delay_s: float = 0.0
    restore_overhead_s: float = 5.0
    # hand-written events [{node, at_s, kind, duration_s?}] appended to the
    # generated trace; lets scenarios pin exact interruption times.
    explicit_events: list[dict] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not self.nodes:
            raise InvalidConfig("at least one node required")
        if self.sim_duration_s <= 0:
            raise InvalidConfig("sim_duration_s must be positive")
        names = [n.name for n in self.nodes]
        if len(set(names)) != len(names):
            raise InvalidConfig("node names must be unique")
        if self.kind_mix:
            unknown = set(self.kind_mix) - set(KIND_KEYS.values())
            if unknown:
                raise InvalidConfig(f"unknown interruption kinds: {sorted(unknown)}")
            total = sum(self.kind_mix.values())
            if abs(total - 1.0) > 1e-9:
                raise InvalidConfig(f"kind_mix probabilities sum to {total}, not 1")
            if any(p < 0 for p in self.kind_mix.values()):
                raise InvalidConfig("kind_mix probabilities must be nonnegative")
        if self.temporary_duration_mean_s <= 0:
            raise InvalidConfig("temporary_duration_mean_s must be positive")
        for wl in self.workloads:
            if wl.owner and wl.owner not in names:
                raise InvalidConfig(f"workload owner {wl.owner!r} is not a node")

    def node(self, name: str) -> SimNodeConfig:
        for n in self.nodes:
            if n.name == name:
                return n
        raise InvalidConfig(f"no node named {name!r}")


def sim_config_to_dict(cfg: SimConfig) -> dict:
    return {
        "seed": cfg.seed,
        "nodes": [
            {
                "name": n.name,
                "gpu_count": n.gpu_count,
                "gpu_memory_mib": n.gpu_memory_mib,
                "compute_capability": list(n.compute_capability),
                "latency_ms": n.latency_ms,
                "interruption_rate_per_day": n.interruption_rate_per_day,
                "gpu_model": n.gpu_model,
            }
            for n in cfg.nodes
        ],
        "workloads": [
            {
                "spec": job_spec_to_wire(w.spec),
                "duration_s": w.duration_s,
                "total_state_bytes": w.total_state_bytes,
                "dirty_fraction": w.dirty_fraction,
                "arrival_s": w.arrival_s,
                "owner": w.owner,
            }
            for w in cfg.workloads
        ],
        "kind_mix": dict(cfg.kind_mix),
        "temporary_duration_mean_s": cfg.temporary_duration_mean_s,
        "link_bandwidth_mbps": cfg.link_bandwidth_mbps,
        "campus_bandwidth_mbps": cfg.campus_bandwidth_mbps,
        "sim_duration_s": cfg.sim_duration_s,
        "heartbeat_interval_s": cfg.heartbeat_interval_s,
        "grace_s": cfg.grace_s,
        "rejoin_delay_s": cfg.rejoin_delay_s,
        "restore_overhead_s": cfg.restore_overhead_s,
        "explicit_events": list(cfg.explicit_events),
    }


def sim_config_from_dict(obj: dict) -> SimConfig:
    try:
        nodes = [
            SimNodeConfig(
                name=n["name"],
                gpu_count=n["gpu_count"],
                gpu_memory_mib=n["gpu_memory_mib"],
                compute_capability=tuple(n["compute_capability"]),
                latency_ms=n["latency_ms"],
                interruption_rate_per_day=n.get("interruption_rate_per_day", 0.0),
                gpu_model=n.get("gpu_model", "sim-gpu"),
            )
            for n in obj["nodes"]
        ]
        workloads = [
            SimWorkloadConfig(
                spec=job_spec_from_wire(w["spec"]),
                duration_s=w["duration_s"],
                total_state_bytes=w["total_state_bytes"],
                dirty_fraction=w.get("dirty_fraction", 0.10),
                arrival_s=w.get("arrival_s", 0.0),
                owner=w.get("owner", ""),
            )
            for w in obj["workloads"]
        ]
        return SimConfig(
            seed=obj["seed"],
            nodes=nodes,
            workloads=workloads,
            kind_mix=dict(obj.get("kind_mix", {})),
            temporary_duration_mean_s=obj.get("temporary_duration_mean_s", 600.0),
            link_bandwidth_mbps=obj["link_bandwidth_mbps"],
            campus_bandwidth_mbps=obj["campus_bandwidth_mbps"],
            sim_duration_s=obj["sim_duration_s"],
            heartbeat_interval_s=obj.get("heartbeat_interval_s", 10.0),
            grace_s=obj.get("grace_s", 60.0),
            rejoin_delay_s=obj.get("rejoin_delay_s", 0.0),
            restore_overhead_s=obj.get("restore_overhead_s", 5.0),
            explicit_events=list(obj.get("explicit_events", [])),
        )
    except (KeyError, TypeError) as exc:
        raise InvalidConfig(f"bad sim config: {exc}") from exc


def load_sim_config(path: str | Path) -> SimConfig:
    try:
        obj = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidConfig(f"cannot read {path}: {exc}") from exc
    return sim_config_from_dict(obj)


def dump_sim_config(cfg: SimConfig, path: str | Path) -> None:
    Path(path).write_text(json.dumps(sim_config_to_dict(cfg), indent=2, sort_keys=True) + "\n")
