"""Injectable millisecond clocks.

Every timestamp in the system is an integer count of milliseconds taken from
a clock object, never from ``time.time()`` directly, so the simulator and the
live services share all code paths.
"""

from __future__ import annotations

import time
from typing import Protocol, runtime_checkable


@runtime_checkable
class Clock(Protocol):
    def now_ms(self) -> int: ...


class SystemClock:
    """Wall clock, for live deployments."""

    def now_ms(self) -> int:
        return int(time.time() * 1000)


class ManualClock:
    """Simulated clock advanced explicitly by tests and the churn simulator."""

    def __init__(self, start_ms: int = 0) -> None:
        self._now = int(start_ms)

    def now_ms(self) -> int:
        return self._now

    def advance(self, delta_ms: int) -> int:
        if delta_ms < 0:
            raise ValueError("clock cannot move backwards")
        self._now += int(delta_ms)
        return self._now

    def advance_to(self, at_ms: int) -> int:
        if at_ms < self._now:
            raise ValueError(f"clock cannot move backwards: {at_ms} < {self._now}")
        self._now = int(at_ms)
        return self._now


def s_to_ms(seconds: float) -> int:
    return int(round(seconds * 1000))


def ms_to_s(ms: int) -> float:
    return ms / 1000.0
