/** Event-feed view model: human descriptions of coordinator log entries
 * plus incremental merging for the polling loop. */

import { shortId } from "./state.js";
import type { EventWire } from "./types.js";

export interface TimelineItem {
  seq: number;
  at: number;
  clock: string;
  kind: string;
  text: string;
}

export function formatClock(atMs: number): string {
  const totalS = Math.floor(atMs / 1000);
  const h = Math.floor(totalS / 3600);
  const m = Math.floor((totalS % 3600) / 60);
  const s = totalS % 60;
  const pad = (n: number) => String(n).padStart(2, "0");
  return `${pad(h)}:${pad(m)}:${pad(s)}`;
}

type P = { kind: string; [key: string]: unknown };

function node(p: P, key = "node_id"): string {
  return shortId(String(p[key] ?? "?"));
}

function describe(p: P): string {
  switch (p.kind) {
    case "node_registered":
      return p.rejoined
        ? `node ${node(p)} rejoined with ${(p.gpus as unknown[]).length} gpu(s)`
        : `node ${node(p)} registered with ${(p.gpus as unknown[]).length} gpu(s)`;
    case "node_state_changed":
      return `node ${node(p)} → ${p.state} (${p.reason})`;
    case "heartbeat_missed":
      return `node ${node(p)} missed heartbeat ×${p.missed}`;
    case "job_enqueued":
      return `job ${p.job_id} enqueued`;
    case "job_state_changed":
      return `job ${p.job_id} → ${p.state} (${p.reason})`;
    case "allocation_granted": {
      const alloc = p.allocation as { job_id: string; node_id: string; gpu_indices: number[] };
      return `job ${alloc.job_id} allocated gpu[${alloc.gpu_indices.join(",")}] on ${shortId(alloc.node_id)}`;
    }
    case "allocation_released":
      return `job ${p.job_id} released from ${node(p)}`;
    case "checkpoint_recorded": {
      const m = p.manifest as { job_id: string; seq: number };
      return `job ${m.job_id} checkpoint #${m.seq} recorded`;
    }
    case "migration_started":
      return `job ${p.job_id} displaced from ${node(p, "from_node")} (${p.reason})`;
    case "migration_completed":
      return `job ${p.job_id} migrated to ${node(p, "to_node")}`;
    case "affinity_set":
      return `job ${p.job_id} prefers return to ${node(p)}`;
    case "interruption_recorded":
      return `interruption on ${node(p)} (${p.reason})`;
    case "day_rolled":
      return `volatility window rolled for ${node(p)}`;
    case "job_cancelled":
      return `job ${p.job_id} cancelled`;
    case "directive_queued": {
      const d = p.directive as { kind: string };
      return `directive "${d.kind}" queued for ${node(p)}`;
    }
    case "heartbeat_accepted":
      return `heartbeat from ${node(p)}`;
    default:
      return p.kind;
  }
}

/** Routine chatter hidden from the feed unless verbose mode is on. */
const NOISY = new Set(["heartbeat_accepted", "day_rolled"]);

export function toTimelineItems(events: EventWire[], verbose = false): TimelineItem[] {
  return events
    .filter((e) => verbose || !NOISY.has(e.payload.kind))
    .map((e) => ({
      seq: e.seq,
      at: e.at,
      clock: formatClock(e.at),
      kind: e.payload.kind,
      text: describe(e.payload),
    }));
}

/** Merge a freshly polled batch into the existing feed, deduplicating by
 * seq and keeping at most `cap` newest items, newest first. */
export function mergeTimeline(
  existing: TimelineItem[],
  incoming: TimelineItem[],
  cap = 200,
): TimelineItem[] {
  const bySeq = new Map<number, TimelineItem>();
  for (const item of existing) bySeq.set(item.seq, item);
  for (const item of incoming) bySeq.set(item.seq, item);
  return [...bySeq.values()].sort((a, b) => b.seq - a.seq).slice(0, cap);
}

/** The next `since_seq` to poll with: one past the newest seq seen. */
export function nextSinceSeq(events: EventWire[], current: number): number {
  let next = current;
  for (const e of events) if (e.seq + 1 > next) next = e.seq + 1;
  return next;
}
