"""Checkpoint payload storage and the network-transfer ledger.

Payloads are opaque blobs addressed ``<job_id>/<seq>.ckpt`` under the storage
target root; manifests live next to them as ``<job_id>/<seq>.manifest.json``.
Two backends implement the same interface: an in-memory one (default for the
simulator and tests) and a directory-backed one for live deployments.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Protocol

from gpunion.domain.ids import NodeId
from gpunion.domain.types import StorageKind, StorageTarget
from gpunion.errors import StorageTargetUnavailable


class StorageBackend(Protocol):
    def put(self, key: str, data: bytes) -> None: ...
    def get(self, key: str) -> bytes | None: ...
    def exists(self, key: str) -> bool: ...
    def keys(self, prefix: str) -> list[str]: ...
    def delete(self, key: str) -> None: ...


class MemoryStorage:
    def __init__(self) -> None:
        self._blobs: dict[str, bytes] = {}

    def put(self, key: str, data: bytes) -> None:
        self._blobs[key] = data

    def get(self, key: str) -> bytes | None:
        return self._blobs.get(key)

    def exists(self, key: str) -> bool:
        return key in self._blobs

    def keys(self, prefix: str) -> list[str]:
        return sorted(k for k in self._blobs if k.startswith(prefix))

    def delete(self, key: str) -> None:
        self._blobs.pop(key, None)


class FileStorage:
    def __init__(self, root: str | Path) -> None:
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def _path(self, key: str) -> Path:
        p = (self.root / key).resolve()
        if self.root.resolve() not in p.parents and p != self.root.resolve():
            raise ValueError(f"key escapes storage root: {key}")
        return p

    def put(self, key: str, data: bytes) -> None:
        p = self._path(key)
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_bytes(data)

    def get(self, key: str) -> bytes | None:
        p = self._path(key)
        return p.read_bytes() if p.exists() else None

    def exists(self, key: str) -> bool:
        return self._path(key).exists()

    def keys(self, prefix: str) -> list[str]:
        out = []
        for p in self.root.rglob("*"):
            if p.is_file():
                key = p.relative_to(self.root).as_posix()
                if key.startswith(prefix):
                    out.append(key)
        return sorted(out)

    def delete(self, key: str) -> None:
        p = self._path(key)
        if p.exists():
            p.unlink()


class CheckpointStore:
    """Routes storage targets to backends and gates node targets on liveness.

    ``node_available`` decides whether a Node(...) target is reachable right
    now; when it returns False the checkpoint is skipped with
    StorageTargetUnavailable and retried at the next interval.
    """

    def __init__(
        self,
        use_files: bool = False,
        node_available: Callable[[NodeId], bool] | None = None,
    ) -> None:
        self._use_files = use_files
        self._node_available = node_available
        self._backends: dict[tuple, StorageBackend] = {}
        # parsed-manifest cache keyed by (backend id, key, raw bytes); the
        # raw bytes in the key make any out-of-band rewrite a cache miss
        self.manifest_cache: dict = {}
        # last known manifest seq per (backend id, job); advisory only
        self.tail_seq_cache: dict = {}

    def backend_for(self, target: StorageTarget) -> StorageBackend:
        if target.kind is StorageKind.NODE:
            assert target.node_id is not None
            if self._node_available is not None and not self._node_available(target.node_id):
                raise StorageTargetUnavailable(f"node {target.node_id} is not reachable")
        key = (target.kind.value, target.node_id.value if target.node_id else None, target.path)
        backend = self._backends.get(key)
        if backend is None:
            backend = FileStorage(target.path) if self._use_files else MemoryStorage()
            self._backends[key] = backend
        return backend

    @staticmethod
    def payload_key(job_id: str, seq: int) -> str:
        return f"{job_id}/{seq}.ckpt"

    @staticmethod
    def manifest_key(job_id: str, seq: int) -> str:
        return f"{job_id}/{seq}.manifest.json"


def transfer_duration_ms(nbytes: int, rate_mbps: float) -> int:
    if rate_mbps <= 0:
        raise ValueError("transfer rate must be positive")
    return math.ceil(nbytes * 8 / (rate_mbps * 1000))


@dataclass(frozen=True)
class Transfer:
    start_ms: int
    end_ms: int
    nbytes: int
    category: str  # "backup" or "restore"
    job_id: str


class BandwidthLedger:
    """Exact record of every checkpoint/restore transfer for accounting.

    Bytes are treated as flowing uniformly between start and end of each
    transfer, which is what the sliding-window bandwidth share integrates.
    """

    def __init__(self) -> None:
        self.transfers: list[Transfer] = []

    def record(self, start_ms: int, nbytes: int, rate_mbps: float, category: str, job_id: str) -> int:
        end_ms = start_ms + transfer_duration_ms(nbytes, rate_mbps)
        self.transfers.append(Transfer(start_ms, end_ms, nbytes, category, job_id))
        return end_ms

    def total_bytes(self, category: str | None = None, job_id: str | None = None) -> int:
        return sum(
            t.nbytes
            for t in self.transfers
            if (category is None or t.category == category)
            and (job_id is None or t.job_id == job_id)
        )

    def window_bytes(self, window_start_ms: int, window_end_ms: int, category: str) -> float:
        """Bytes attributable to [start, end) assuming uniform flow per transfer."""
        total = 0.0
        for t in self.transfers:
            if t.category != category:
                continue
            lo = max(t.start_ms, window_start_ms)
            hi = min(t.end_ms, window_end_ms)
            if hi <= lo:
                continue
            span = t.end_ms - t.start_ms
            total += t.nbytes if span == 0 else t.nbytes * (hi - lo) / span
        return total

    def peak_window_rate_bps(self, window_ms: int, category: str = "backup") -> float:
        """Peak bits/s over any sliding window; evaluated at transfer boundaries.

        The aggregate flow rate is piecewise constant between transfer
        boundaries, so window bytes are a difference of the cumulative
        integral F and the maximum occurs with a window edge on a boundary.
        """
        deltas: dict[int, float] = {}
        for t in self.transfers:
            if t.category != category:
                continue
            span = t.end_ms - t.start_ms
            if span == 0:
                continue  # ceil() duration makes nonempty transfers take >= 1 ms
            rate = t.nbytes / span
            deltas[t.start_ms] = deltas.get(t.start_ms, 0.0) + rate
            deltas[t.end_ms] = deltas.get(t.end_ms, 0.0) - rate
        if not deltas:
            return 0.0
        times = sorted(deltas)
        cum = [0.0] * len(times)  # cum[i] = bytes delivered by times[i]
        rate_after = [0.0] * len(times)
        running = 0.0
        for i, at in enumerate(times):
            if i > 0:
                cum[i] = cum[i - 1] + running * (at - times[i - 1])
            running += deltas[at]
            rate_after[i] = running

        def integral(at: int) -> float:
            if at <= times[0]:
                return 0.0
            if at >= times[-1]:
                return cum[-1]
            i = bisect.bisect_right(times, at) - 1
            return cum[i] + rate_after[i] * (at - times[i])

        peak = 0.0
        for mark in times:
            for start in (mark, mark - window_ms):
                got = integral(start + window_ms) - integral(start)
                peak = max(peak, got)
        return 8.0 * peak / (window_ms / 1000.0)


def iter_category(transfers: Iterable[Transfer], category: str) -> Iterable[Transfer]:
    return (t for t in transfers if t.category == category)
