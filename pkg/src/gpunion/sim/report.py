"""Simulation reporting: per-job ledgers, cluster metrics, trace digest.

Every reported number is recomputed from primary records (the coordinator
event log, the engine's job timelines, the bandwidth ledger), so tests can
check the report against the same records independently.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from gpunion.coordinator import events as ev
from gpunion.coordinator.events import entry_to_wire
from gpunion.domain.wire import canonical_json
from gpunion.resilience.store import BandwidthLedger


@dataclass
class JobReport:
    job_id: str
    completed: bool
    interruptions: int
    migrations: int
    lost_work_s: float
    gap_s: float
    total_time_s: float | None
    base_time_s: float
    overhead_pct: float | None
    # total - (base + lost + gaps) in ms; 0 for every completed job
    conservation_residual_ms: int | None
    lost_by_reason_s: dict[str, list[float]] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "job_id": self.job_id,
            "completed": self.completed,
            "interruptions": self.interruptions,
            "migrations": self.migrations,
            "lost_work_s": self.lost_work_s,
            "gap_s": self.gap_s,
            "total_time_s": self.total_time_s,
            "base_time_s": self.base_time_s,
            "overhead_pct": self.overhead_pct,
            "conservation_residual_ms": self.conservation_residual_ms,
            "lost_by_reason_s": {k: list(v) for k, v in sorted(self.lost_by_reason_s.items())},
        }


@dataclass
class SimReport:
    seed: int
    per_job: list[JobReport]
    cluster: dict
    trace_digest: str
    trace_rows: list[dict] = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "per_job": [j.to_dict() for j in self.per_job],
            "cluster": dict(self.cluster),
            "trace_digest": self.trace_digest,
        }


def bandwidth_share_pct(
    ledger: BandwidthLedger, campus_bandwidth_mbps: float, window_ms: int = 60_000
) -> float:
    """Peak 60 s-window backup rate as a percentage of campus bandwidth."""
    peak_bps = ledger.peak_window_rate_bps(window_ms, "backup")
    return 100.0 * peak_bps / (campus_bandwidth_mbps * 1_000_000.0)


def log_digest(entries) -> str:
    blob = canonical_json([entry_to_wire(e) for e in entries]).encode()
    return hashlib.sha256(blob).hexdigest()


def _scan_log(entries):
    """Single pass over the coordinator log for migration bookkeeping."""
    interruptions: dict[str, int] = {}
    migrations: dict[str, int] = {}
    graceful_total = 0
    graceful_pending: dict[str, int] = {}
    graceful_resolved = 0
    affinity_pending: dict[str, tuple[str, int]] = {}  # job -> (origin, expires)
    displaced_total = 0
    returned_total = 0
    for entry in entries:
        p = entry.payload
        if isinstance(p, ev.MigrationStarted):
            interruptions[p.job_id] = interruptions.get(p.job_id, 0) + 1
            displaced_total += 1
            if p.reason == "graceful-departure":
                graceful_total += 1
                graceful_pending[p.job_id] = graceful_pending.get(p.job_id, 0) + 1
        elif isinstance(p, ev.MigrationCompleted):
            migrations[p.job_id] = migrations.get(p.job_id, 0) + 1
            if graceful_pending.get(p.job_id):
                graceful_pending[p.job_id] -= 1
                graceful_resolved += 1
        elif isinstance(p, ev.AffinitySet):
            affinity_pending[p.job_id] = (p.node_id.value, p.expires_at)
        elif isinstance(p, ev.AllocationGranted):
            pending = affinity_pending.pop(p.allocation.job_id, None)
            if pending is not None:
                origin, expires = pending
                if p.allocation.node_id.value == origin and entry.at < expires:
                    returned_total += 1
    return {
        "interruptions": interruptions,
        "migrations": migrations,
        "graceful_total": graceful_total,
        "graceful_resolved": graceful_resolved,
        "displaced_total": displaced_total,
        "returned_total": returned_total,
    }


def build_report(engine, baseline_utilization_pct: float | None = None) -> SimReport:
    scan = _scan_log(engine.coord.log)
    per_job: list[JobReport] = []
    all_lost_ms: list[int] = []
    for job_id in sorted(engine.timelines):
        tl = engine.timelines[job_id]
        lost_by_reason: dict[str, list[float]] = {}
        lost_ms_total = 0
        gaps_ms = 0
        if tl.segments:
            gaps_ms += tl.segments[0].ready_ms - tl.arrival_ms
        for i, stop in enumerate(tl.stops):
            if i + 1 >= len(tl.segments):
                break  # displaced but never re-granted before sim end
            nxt = tl.segments[i + 1]
            lost = stop.progress_ms - nxt.base_ms
            lost_ms_total += lost
            all_lost_ms.append(lost)
            lost_by_reason.setdefault(stop.reason, []).append(lost / 1000.0)
            gaps_ms += nxt.ready_ms - max(stop.at_ms, tl.segments[i].ready_ms)
        completed = tl.completed_at_ms is not None
        total_ms = (tl.completed_at_ms - tl.arrival_ms) if completed else None
        residual = None
        overhead = None
        if completed:
            residual = total_ms - (tl.base_ms + lost_ms_total + gaps_ms)
            overhead = 100.0 * (total_ms - tl.base_ms) / tl.base_ms
        per_job.append(
            JobReport(
                job_id=job_id,
                completed=completed,
                interruptions=scan["interruptions"].get(job_id, 0),
                migrations=scan["migrations"].get(job_id, 0),
                lost_work_s=lost_ms_total / 1000.0,
                gap_s=gaps_ms / 1000.0,
                total_time_s=total_ms / 1000.0 if total_ms is not None else None,
                base_time_s=tl.base_ms / 1000.0,
                overhead_pct=overhead,
                conservation_residual_ms=residual,
                lost_by_reason_s=lost_by_reason,
            )
        )
    cluster = {
        "graceful_migration_success_pct": (
            100.0 * scan["graceful_resolved"] / scan["graceful_total"]
            if scan["graceful_total"]
            else 100.0
        ),
        "graceful_displacements": scan["graceful_total"],
        "displaced_total": scan["displaced_total"],
        "returned_total": scan["returned_total"],
        "return_migration_pct": (
            100.0 * scan["returned_total"] / scan["displaced_total"]
            if scan["displaced_total"]
            else 0.0
        ),
        "mean_lost_work_s": (
            sum(all_lost_ms) / len(all_lost_ms) / 1000.0 if all_lost_ms else 0.0
        ),
        "max_lost_work_s": max(all_lost_ms) / 1000.0 if all_lost_ms else 0.0,
        "backup_bandwidth_share_pct": bandwidth_share_pct(
            engine.ledger, engine.config.campus_bandwidth_mbps
        ),
        "backup_bytes_total": engine.ledger.total_bytes("backup"),
        "restore_bytes_total": engine.ledger.total_bytes("restore"),
        "utilization_pct": engine.utilization_pct(),
        "baseline_utilization_pct": baseline_utilization_pct,
        "jobs_completed": sum(1 for j in per_job if j.completed),
    }
    return SimReport(
        seed=engine.config.seed,
        per_job=per_job,
        cluster=cluster,
        trace_digest=log_digest(engine.coord.log),
        trace_rows=list(engine.trace_rows),
    )


def report_from_dict(obj: dict) -> SimReport:
    per_job = [
        JobReport(
            job_id=j["job_id"],
            completed=j["completed"],
            interruptions=j["interruptions"],
            migrations=j["migrations"],
            lost_work_s=j["lost_work_s"],
            gap_s=j["gap_s"],
            total_time_s=j["total_time_s"],
            base_time_s=j["base_time_s"],
            overhead_pct=j["overhead_pct"],
            conservation_residual_ms=j["conservation_residual_ms"],
            lost_by_reason_s={k: list(v) for k, v in j.get("lost_by_reason_s", {}).items()},
        )
        for j in obj["per_job"]
    ]
    return SimReport(
        seed=obj["seed"],
        per_job=per_job,
        cluster=dict(obj["cluster"]),
        trace_digest=obj["trace_digest"],
    )


# ----------------------------------------------------------------------
# file outputs

def write_outputs(report: SimReport, out_dir: str | Path, plots: bool = True) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")
    with (out / "trace.csv").open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["at_ms", "kind", "node", "job", "detail"])
        writer.writeheader()
        writer.writerows(report.trace_rows)
    if plots:
        render_plots(report, out / "plots")
    return out


def render_plots(report: SimReport, plot_dir: str | Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plot_dir = Path(plot_dir)
    plot_dir.mkdir(parents=True, exist_ok=True)

    fig, ax = plt.subplots(figsize=(4, 3))
    labels = ["shared pool"]
    values = [report.cluster["utilization_pct"]]
    if report.cluster.get("baseline_utilization_pct") is not None:
        labels.append("static ownership")
        values.append(report.cluster["baseline_utilization_pct"])
    ax.bar(labels, values, color=["#3b7dd8", "#999999"][: len(values)])
    ax.set_ylabel("GPU utilization (%)")
    ax.set_ylim(0, 100)
    fig.tight_layout()
    fig.savefig(plot_dir / "utilization.png", dpi=120)
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(5, 3))
    by_reason: dict[str, list[float]] = {}
    for job in report.per_job:
        for reason, losses in job.lost_by_reason_s.items():
            by_reason.setdefault(reason, []).extend(losses)
    reasons = sorted(by_reason)
    means = [sum(by_reason[r]) / len(by_reason[r]) for r in reasons]
    ax.bar(reasons, means, color="#d86a3b")
    ax.set_ylabel("mean lost work (s)")
    fig.tight_layout()
    fig.savefig(plot_dir / "lost_work.png", dpi=120)
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(5, 3))
    completed = [j for j in report.per_job if j.overhead_pct is not None]
    ax.bar([j.job_id for j in completed], [j.overhead_pct for j in completed], color="#3baa6e")
    ax.set_ylabel("overhead (%)")
    ax.tick_params(axis="x", rotation=90, labelsize=6)
    fig.tight_layout()
    fig.savefig(plot_dir / "overhead.png", dpi=120)
    plt.close(fig)
