"""Coordinator configuration and its on-disk key/value form."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import yaml


@dataclass
class SchedulerConfig:
    heartbeat_interval_s: float = 10.0
    miss_threshold: int = 3  # paper-fixed; validation rejects anything else
    weight_volatility: float = 0.5
    weight_latency: float = 0.5
    grace_default_s: float = 60.0
    affinity_window_default_s: float = 1800.0
    ewma_alpha: float = 0.3
    volatility_prior: float = 1.0
    allow_list: set[str] = field(default_factory=set)

    def __post_init__(self) -> None:
        if self.miss_threshold != 3:
            raise ValueError("miss_threshold is fixed at 3")
        if not 0.0 <= self.weight_volatility <= 1.0:
            raise ValueError("weight_volatility must be within [0, 1]")
        if abs(self.weight_volatility + self.weight_latency - 1.0) > 1e-9:
            raise ValueError("weights must sum to 1")
        if not 0.0 < self.ewma_alpha <= 1.0:
            raise ValueError("ewma_alpha must be in (0, 1]")
        if self.heartbeat_interval_s <= 0:
            raise ValueError("heartbeat_interval_s must be positive")

    @property
    def heartbeat_interval_ms(self) -> int:
        return int(round(self.heartbeat_interval_s * 1000))


def load_coordinator_config(path: str | Path) -> SchedulerConfig:
    raw = yaml.safe_load(Path(path).read_text()) or {}
    kwargs = {}
    for key in (
        "heartbeat_interval_s",
        "miss_threshold",
        "weight_volatility",
        "weight_latency",
        "grace_default_s",
        "affinity_window_default_s",
        "ewma_alpha",
        "volatility_prior",
    ):
        if key in raw:
            kwargs[key] = raw[key]
    if "weight_volatility" in kwargs and "weight_latency" not in kwargs:
        kwargs["weight_latency"] = 1.0 - kwargs["weight_volatility"]
    kwargs["allow_list"] = set(raw.get("allow_list", []))
    return SchedulerConfig(**kwargs)


def dump_coordinator_config(config: SchedulerConfig, path: str | Path) -> None:
    doc = {
        "heartbeat_interval_s": config.heartbeat_interval_s,
        "miss_threshold": config.miss_threshold,
        "weight_volatility": config.weight_volatility,
        "weight_latency": config.weight_latency,
        "grace_default_s": config.grace_default_s,
        "affinity_window_default_s": config.affinity_window_default_s,
        "ewma_alpha": config.ewma_alpha,
        "volatility_prior": config.volatility_prior,
        "allow_list": sorted(config.allow_list),
    }
    Path(path).write_text(yaml.safe_dump(doc, sort_keys=False))
