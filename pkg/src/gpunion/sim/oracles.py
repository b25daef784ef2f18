"""Closed-form predictions used to cross-check simulator output.

These are deliberately independent of the engine: plain arithmetic on the
scenario parameters, no shared code with scheduling or checkpointing.
"""

from __future__ import annotations

import math


def expected_lost_work_s(checkpoint_interval_s: float) -> float:
    """Mean work lost to an emergency interruption with uniformly random phase.

    The interruption lands uniformly inside a checkpoint interval, so the
    expected distance back to the last durable checkpoint is interval/2.
    """
    return checkpoint_interval_s / 2.0


def overhead_pct(
    n_interruptions: int,
    lost_per_interruption_s: float,
    restore_s: float,
    requeue_s: float,
    base_s: float,
) -> float:
    """Training-time inflation: each interruption costs lost work plus the
    restore and requeue delays, all relative to the undisturbed duration."""
    return 100.0 * n_interruptions * (lost_per_interruption_s + restore_s + requeue_s) / base_s


def return_probability(affinity_window_s: float, mean_downtime_s: float) -> float:
    """P(displaced job is re-granted to its origin inside the affinity window).

    Downtime is exponential with the given mean. Displacement happens only
    after the failure detector fires, but the exponential's memorylessness
    makes the detection delay cancel: the residual downtime after detection
    is again exponential, so P(return) = 1 - exp(-window/mean).
    """
    return 1.0 - math.exp(-affinity_window_s / mean_downtime_s)


def analytic_oracles(
    checkpoint_interval_s: float,
    n_interruptions: int,
    restore_s: float,
    requeue_s: float,
    base_s: float,
    affinity_window_s: float,
    mean_downtime_s: float,
) -> dict[str, float]:
    lost = expected_lost_work_s(checkpoint_interval_s)
    return {
        "expected_lost_work_s": lost,
        "expected_overhead_pct": overhead_pct(
            n_interruptions, lost, restore_s, requeue_s, base_s
        ),
        "return_probability": return_probability(affinity_window_s, mean_downtime_s),
    }
