"""Allocation policy: constraint filtering, volatility/latency scoring, round-robin ties.

Pure functions over immutable snapshots, shared by the live scheduler tick
and by migration planning. Scores are computed with exact rational
arithmetic so equal candidates compare equal and the argmax is invariant
under rescaling all latencies by a positive constant.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from gpunion.domain.ids import NodeId
from gpunion.domain.types import GpuDescriptor, JobSpec, NodeState, capability_at_least


@dataclass(frozen=True)
class CandidateNode:
    """Scheduling-relevant view of one node at snapshot time."""

    node_id: NodeId
    state: NodeState
    latency_ms: float
    volatility_score: float
    free_gpus: tuple[GpuDescriptor, ...]


def gpu_fits(gpu: GpuDescriptor, spec: JobSpec) -> bool:
    return gpu.memory_mib >= spec.gpu_memory_mib_required and capability_at_least(
        gpu.compute_capability, spec.min_compute_capability
    )


def eligible_gpu(node: CandidateNode, spec: JobSpec) -> GpuDescriptor | None:
    """Lowest-indexed free GPU satisfying the job's constraints, if any."""
    for gpu in sorted(node.free_gpus, key=lambda g: g.index):
        if gpu_fits(gpu, spec):
            return gpu
    return None


def filter_candidates(spec: JobSpec, nodes: list[CandidateNode]) -> list[CandidateNode]:
    return [
        n for n in nodes if n.state is NodeState.ACTIVE and eligible_gpu(n, spec) is not None
    ]


def score_candidates(
    candidates: list[CandidateNode], weight_volatility: float, weight_latency: float
) -> dict[NodeId, Fraction]:
    """s = w_v * (1 - vol_norm) + w_l * (1 - lat_norm), min-max normalized.

    Normalized terms are 0 when the candidate set is a singleton or the
    range is zero.
    """
    vols = [Fraction(n.volatility_score) for n in candidates]
    lats = [Fraction(n.latency_ms) for n in candidates]
    w_v = Fraction(weight_volatility)
    w_l = Fraction(weight_latency)

    def norms(values: list[Fraction]) -> list[Fraction]:
        lo, hi = min(values), max(values)
        if hi == lo:
            return [Fraction(0)] * len(values)
        return [(v - lo) / (hi - lo) for v in values]

    vol_n = norms(vols)
    lat_n = norms(lats)
    return {
        n.node_id: w_v * (1 - vn) + w_l * (1 - ln)
        for n, vn, ln in zip(candidates, vol_n, lat_n)
    }


def break_tie_round_robin(
    tied: list[NodeId], all_node_ids_sorted: list[NodeId], cursor: int
) -> NodeId:
    """Pick the tied node closest at-or-after the cursor in global NodeId order."""
    ranks = {nid: i for i, nid in enumerate(all_node_ids_sorted)}
    n = len(all_node_ids_sorted)
    return min(sorted(tied), key=lambda nid: (ranks[nid] - cursor) % n)


def choose_node(
    spec: JobSpec,
    nodes: list[CandidateNode],
    weight_volatility: float,
    weight_latency: float,
    all_node_ids_sorted: list[NodeId],
    cursor: int,
) -> NodeId | None:
    """Full policy: filter, score, argmax, round-robin tie-break. None if no fit."""
    candidates = filter_candidates(spec, nodes)
    if not candidates:
        return None
    scores = score_candidates(candidates, weight_volatility, weight_latency)
    best = max(scores.values())
    tied = [nid for nid, s in scores.items() if s == best]
    if len(tied) == 1:
        return tied[0]
    return break_tie_round_robin(tied, all_node_ids_sorted, cursor)


def advance_cursor(chosen: NodeId, all_node_ids_sorted: list[NodeId]) -> int:
    ranks = {nid: i for i, nid in enumerate(all_node_ids_sorted)}
    return (ranks[chosen] + 1) % len(all_node_ids_sorted)
