"""Interruption trace generation.

Each node's interruptions form an independent Poisson process at the node's
configured rate; event kinds are drawn from the scenario's kind mix and
temporary-unavailability durations are exponential. Every draw comes from a
per-node generator seeded as ``{seed}:{node name}``, so traces are
reproducible and insensitive to node-list ordering.
"""

from __future__ import annotations

import hashlib
import random

from gpunion.domain.ids import NodeId
from gpunion.domain.types import InterruptionEvent, InterruptionKind
from gpunion.errors import InvalidConfig
from gpunion.sim.config import KIND_KEYS, SimConfig

_KIND_BY_KEY = {v: k for k, v in KIND_KEYS.items()}

SECONDS_PER_DAY = 86400.0


def node_id_for(name: str) -> NodeId:
    """Stable synthetic node identity derived from the scenario node name."""
    return NodeId(hashlib.md5(f"gpunion-sim:{name}".encode()).hexdigest())


def generate_trace(config: SimConfig) -> list[InterruptionEvent]:
    events: list[InterruptionEvent] = []
    for node in config.nodes:
        if node.interruption_rate_per_day <= 0:
            continue
        if not config.kind_mix:
            raise InvalidConfig("kind_mix required when interruption rates are nonzero")
        rng = random.Random(f"{config.seed}:{node.name}")
        kinds = sorted(config.kind_mix)
        weights = [config.kind_mix[k] for k in kinds]
        rate_per_s = node.interruption_rate_per_day / SECONDS_PER_DAY
        t = 0.0
        while True:
            t += rng.expovariate(rate_per_s)
            if t >= config.sim_duration_s:
                break
            kind = _KIND_BY_KEY[rng.choices(kinds, weights=weights)[0]]
            duration = None
            if kind is InterruptionKind.TEMPORARY_UNAVAILABILITY:
                duration = rng.expovariate(1.0 / config.temporary_duration_mean_s)
            events.append(
                InterruptionEvent(
                    kind=kind,
                    node=node_id_for(node.name),
                    at=int(round(t * 1000)),
                    duration_s=duration,
                )
            )
    for raw in config.explicit_events:
        try:
            events.append(
                InterruptionEvent(
                    kind=_KIND_BY_KEY[raw["kind"]],
                    node=node_id_for(raw["node"]),
                    at=int(round(raw["at_s"] * 1000)),
                    duration_s=raw.get("duration_s"),
                )
            )
        except (KeyError, ValueError) as exc:
            raise InvalidConfig(f"bad explicit event {raw!r}: {exc}") from exc
    events.sort(key=lambda e: (e.at, e.node.value, e.kind.value))
    return events
