"""Stable identifiers for nodes and jobs.

A node identity is a 128-bit value rendered as 32 lowercase hex characters.
It is generated once on a machine's first agent start, persisted in the
agent's state directory, and reused on every re-registration so volatility
history survives restarts.
"""

from __future__ import annotations

import random
import re
import secrets
from dataclasses import dataclass

_HEX128_RE = re.compile(r"^[0-9a-f]{32}$")


@dataclass(frozen=True, order=True)
class NodeId:
    value: str

    def __post_init__(self) -> None:
        if not _HEX128_RE.match(self.value):
            raise ValueError(f"node id must be 32 lowercase hex chars, got {self.value!r}")

    @classmethod
    def generate(cls, rng: random.Random | None = None) -> "NodeId":
        if rng is None:
            return cls(secrets.token_hex(16))
        return cls(f"{rng.getrandbits(128):032x}")

    def __str__(self) -> str:
        return self.value


def new_job_id(rng: random.Random | None = None) -> str:
    """Opaque job identifier; 64-bit hex with a readable prefix."""
    if rng is None:
        return "job-" + secrets.token_hex(8)
    return "job-" + f"{rng.getrandbits(64):016x}"
