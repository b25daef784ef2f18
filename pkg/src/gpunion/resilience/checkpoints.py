"""Checkpoint creation, hash-verified restore, and lost-work accounting.

A job's checkpoints form a chain: each incremental manifest points at its
parent via ``parent_seq`` and the chain terminates at a full capture.
Restore walks from the latest full manifest forward, verifying content
hashes; on corruption it falls back to the longest verifiable prefix.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass

from gpunion.domain.types import CheckpointManifest, CheckpointMode, StorageTarget
from gpunion.domain.wire import canonical_json, manifest_from_wire, manifest_to_wire
from gpunion.errors import BrokenChain, HashMismatch, PayloadMissing
from gpunion.resilience.store import CheckpointStore

MANIFEST_OVERHEAD_BYTES = 4096
DEFAULT_RESTORE_OVERHEAD_S = 5.0
DEFAULT_FULL_EVERY_N = 10


@dataclass(frozen=True)
class CheckpointPolicy:
    interval_s: float
    mode: CheckpointMode
    full_every_n: int = DEFAULT_FULL_EVERY_N

    def __post_init__(self) -> None:
        if self.interval_s <= 0:
            raise ValueError("checkpoint interval must be positive")
        if self.full_every_n < 1:
            raise ValueError("full_every_n must be >= 1")


@dataclass
class WorkloadStateModel:
    """Simulated application state for checkpoint sizing."""

    total_state_bytes: int
    dirty_fraction: float = 0.10

    def __post_init__(self) -> None:
        if self.total_state_bytes <= 0:
            raise ValueError("total_state_bytes must be positive")
        if not 0.0 < self.dirty_fraction <= 1.0:
            raise ValueError("dirty_fraction must be in (0, 1]")


def payload_size_bytes(mode: CheckpointMode, total_state_bytes: int, dirty_fraction: float) -> int:
    if mode is CheckpointMode.FULL:
        return total_state_bytes
    return math.ceil(dirty_fraction * total_state_bytes) + MANIFEST_OVERHEAD_BYTES


def _encode_payload(job_id: str, seq: int, progress_ms: int, declared_bytes: int) -> bytes:
    # The simulated payload records the work marker; declared_bytes stands in
    # for the snapshot size, which is never materialized.
    return canonical_json(
        {
            "job_id": job_id,
            "seq": seq,
            "progress_ms": progress_ms,
            "declared_bytes": declared_bytes,
        }
    ).encode()


def _decode_payload(blob: bytes) -> dict:
    return json.loads(blob.decode())


def _hash(blob: bytes) -> str:
    return hashlib.sha256(blob).hexdigest()


def _read_manifest(store: CheckpointStore, backend, job_id: str, seq: int) -> CheckpointManifest | None:
    """Parse one manifest, memoized on its raw bytes; None if absent or bad."""
    key = store.manifest_key(job_id, seq)
    data = backend.get(key)
    if data is None:
        return None
    cache_key = (id(backend), key, data)
    manifest = store.manifest_cache.get(cache_key)
    if manifest is None:
        try:
            manifest = manifest_from_wire(json.loads(data.decode()))
        except (ValueError, KeyError, TypeError):
            return None
        store.manifest_cache[cache_key] = manifest
    return manifest


def _manifest_seqs(store: CheckpointStore, backend, job_id: str) -> list[int]:
    prefix = f"{job_id}/"
    suffix = ".manifest.json"
    seqs = []
    for key in backend.keys(prefix):
        if key.endswith(suffix):
            try:
                seqs.append(int(key[len(prefix) : -len(suffix)]))
            except ValueError:
                continue
    seqs.sort()
    return seqs


def load_chain(store: CheckpointStore, job_id: str, target: StorageTarget) -> list[CheckpointManifest]:
    backend = store.backend_for(target)
    out = []
    for seq in _manifest_seqs(store, backend, job_id):
        m = _read_manifest(store, backend, job_id, seq)
        if m is not None:
            out.append(m)
    return out


def create_checkpoint(
    store: CheckpointStore,
    job_id: str,
    policy: CheckpointPolicy,
    target: StorageTarget,
    state: WorkloadStateModel,
    progress_ms: int,
    now_ms: int,
    force_mode: CheckpointMode | None = None,
) -> CheckpointManifest:
    """Append one checkpoint to the job's chain and persist payload + manifest.

    The first checkpoint of a chain is always full; in incremental mode every
    ``full_every_n``-th capture is full to bound restore-chain length.
    Raises StorageTargetUnavailable when the target is unreachable (the
    caller keeps the job running and retries next interval).
    """
    backend = store.backend_for(target)
    tail_key = (id(backend), job_id)
    tail_seq = store.tail_seq_cache.get(tail_key)
    if tail_seq is None:
        seqs = _manifest_seqs(store, backend, job_id)
        tail_seq = seqs[-1] if seqs else -1
    tail = _read_manifest(store, backend, job_id, tail_seq) if tail_seq >= 0 else None
    seq = tail_seq + 1
    if force_mode is not None:
        mode = force_mode
    else:
        mode = _select_mode_from_tail(store, backend, policy, tail)
    # an unreadable tail degrades to a fresh full capture
    parent_seq = None if mode is CheckpointMode.FULL or tail is None else tail.seq
    nbytes = payload_size_bytes(mode, state.total_state_bytes, state.dirty_fraction)
    blob = _encode_payload(job_id, seq, progress_ms, nbytes)
    manifest = CheckpointManifest(
        job_id=job_id,
        seq=seq,
        parent_seq=parent_seq,
        created_at=now_ms,
        payload_bytes=nbytes,
        content_hash=_hash(blob),
        target=target,
    )
    backend.put(store.payload_key(job_id, seq), blob)
    backend.put(
        store.manifest_key(job_id, seq),
        canonical_json(manifest_to_wire(manifest)).encode(),
    )
    store.tail_seq_cache[tail_key] = seq
    return manifest


def _select_mode_from_tail(
    store: CheckpointStore, backend, policy: CheckpointPolicy, tail: CheckpointManifest | None
) -> CheckpointMode:
    if policy.mode is CheckpointMode.FULL or tail is None:
        return CheckpointMode.FULL
    # walk parent links back to the last full capture; chains are bounded
    # by full_every_n so this stays short
    cur = tail
    while not cur.is_full:
        if cur.parent_seq is None:
            return CheckpointMode.FULL
        parent = _read_manifest(store, backend, cur.job_id, cur.parent_seq)
        if parent is None:
            return CheckpointMode.FULL
        cur = parent
    since_full = tail.seq - cur.seq + 1
    if since_full >= policy.full_every_n:
        return CheckpointMode.FULL
    return CheckpointMode.INCREMENTAL


@dataclass(frozen=True)
class RestoreResult:
    progress_ms: int
    transfer_bytes: int
    manifests: tuple[CheckpointManifest, ...]
    fallback_from_seq: int | None  # set when corruption forced a shorter prefix


def restore_latest(store: CheckpointStore, job_id: str, target: StorageTarget) -> RestoreResult:
    """Restore from the tail of the chain, falling back on corrupt deltas.

    The segment considered runs from the latest full manifest to the chain
    tail. Each payload is verified against its manifest hash; the restore
    uses the longest verifiable prefix of the segment. With nothing
    verifiable the appropriate error is raised and the caller re-queues the
    job as stateless.
    """
    backend = store.backend_for(target)
    seqs = _manifest_seqs(store, backend, job_id)
    if not seqs:
        raise BrokenChain(f"no checkpoints recorded for {job_id}")
    tail = _read_manifest(store, backend, job_id, seqs[-1])
    if tail is None:
        raise BrokenChain(f"unreadable chain tail for {job_id}")
    segment = _segment_from_tail(store, backend, tail)

    verified: list[CheckpointManifest] = []
    progress_ms: int | None = None
    failure: Exception | None = None
    for m in segment:
        blob = backend.get(store.payload_key(job_id, m.seq))
        if blob is None:
            failure = PayloadMissing(f"payload missing for {job_id} seq {m.seq}")
            break
        if _hash(blob) != m.content_hash:
            failure = HashMismatch(f"payload hash mismatch for {job_id} seq {m.seq}")
            break
        payload = _decode_payload(blob)
        if payload.get("job_id") != job_id or payload.get("seq") != m.seq:
            failure = HashMismatch(f"payload identity mismatch for {job_id} seq {m.seq}")
            break
        verified.append(m)
        progress_ms = payload["progress_ms"]

    if not verified or progress_ms is None:
        raise failure if failure is not None else BrokenChain(f"empty segment for {job_id}")

    fallback = None
    if len(verified) < len(segment):
        fallback = segment[len(verified)].seq
    return RestoreResult(
        progress_ms=progress_ms,
        transfer_bytes=sum(m.payload_bytes for m in verified),
        manifests=tuple(verified),
        fallback_from_seq=fallback,
    )


def _segment_from_tail(
    store: CheckpointStore, backend, tail: CheckpointManifest
) -> list[CheckpointManifest]:
    segment = [tail]
    cur = tail
    while not cur.is_full:
        parent = (
            _read_manifest(store, backend, tail.job_id, cur.parent_seq)
            if cur.parent_seq is not None
            else None
        )
        if parent is None:
            raise BrokenChain(f"chain for {tail.job_id} does not reach a full manifest")
        cur = parent
        segment.append(cur)
    segment.reverse()
    return segment


def lost_work_ms(progress_at_interrupt_ms: int, durable_progress_ms: int) -> int:
    """Work redone after an interruption: progress at the cut minus the last
    durable marker. Zero when a final graceful checkpoint completed."""
    return max(0, progress_at_interrupt_ms - durable_progress_ms)


def estimate_restore_downtime_ms(
    transfer_bytes: int,
    link_bandwidth_mbps: float,
    restore_overhead_s: float = DEFAULT_RESTORE_OVERHEAD_S,
) -> int:
    if link_bandwidth_mbps <= 0:
        raise ValueError("link bandwidth must be positive")
    transfer_ms = math.ceil(transfer_bytes * 8 / (link_bandwidth_mbps * 1000))
    return transfer_ms + int(round(restore_overhead_s * 1000))
