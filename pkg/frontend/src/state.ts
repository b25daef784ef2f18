/** Pure view-model layer: turns wire payloads into render-ready rows.
 * No DOM, no network — everything here is unit-testable. */

import type { ClusterSummaryWire, JobSpecWire, JobWire, NodeWire } from "./types.js";

/** Image digests pre-trusted by the dev cluster; the submit form's presets
 * use them so a fresh `gpunion devcluster` accepts the job. */
export const DEV_NOTEBOOK_DIGEST =
  "4963c288a80f429cf041f232116cae4deb1b9eeb12c6713bebb3c72377396595";
export const DEV_BATCH_DIGEST =
  "8107c99be4fefe66140197ed42801f58e456a1b439b82067a36b44afd6a1381a";

export function shortId(id: string): string {
  return id.length > 10 ? `${id.slice(0, 8)}…` : id;
}

export interface NodeRow {
  id: string;
  short: string;
  state: string;
  gpuCount: number;
  busyGpus: number;
  latencyMs: number;
  volatility: string;
  missed: number;
  /** which lifecycle actions make sense in this state */
  canPause: boolean;
  canResume: boolean;
  canDrain: boolean;
  canKill: boolean;
}

export function nodeRow(node: NodeWire, busyByNode?: Map<string, number>): NodeRow {
  const state = node.state.kind;
  const gone = state === "departed" || state === "unavailable";
  return {
    id: node.id,
    short: shortId(node.id),
    state,
    gpuCount: node.gpus.length,
    busyGpus: busyByNode?.get(node.id) ?? 0,
    latencyMs: node.latency_ms,
    volatility: node.volatility_score.toFixed(2),
    missed: node.missed_heartbeats,
    canPause: state === "active",
    canResume: state === "paused",
    canDrain: !gone && state !== "draining",
    canKill: !gone,
  };
}

export interface JobRow {
  id: string;
  state: string;
  image: string;
  mode: string;
  priority: number;
  placement: string;
  gpuIndices: string;
  affinity: string;
  canCancel: boolean;
}

const TERMINAL_JOB_STATES = new Set(["completed", "failed", "lost"]);

export function jobRow(job: JobWire): JobRow {
  const alloc = job.allocations[job.allocations.length - 1];
  const state = job.state.kind;
  const placed = alloc && !TERMINAL_JOB_STATES.has(state) && state !== "pending";
  return {
    id: job.job_id,
    state,
    image: job.spec.image_ref,
    mode: job.spec.mode.kind,
    priority: job.spec.priority,
    placement: placed ? shortId(alloc.node_id) : "—",
    gpuIndices: placed ? alloc.gpu_indices.join(",") : "—",
    affinity: job.affinity_node ? shortId(job.affinity_node) : "—",
    canCancel: !TERMINAL_JOB_STATES.has(state),
  };
}

/** GPU-busy counts per node, derived from current job allocations. */
export function busyByNode(jobs: JobWire[]): Map<string, number> {
  const out = new Map<string, number>();
  for (const job of jobs) {
    const state = job.state.kind;
    if (TERMINAL_JOB_STATES.has(state) || state === "pending") continue;
    const alloc = job.allocations[job.allocations.length - 1];
    if (!alloc) continue;
    out.set(alloc.node_id, (out.get(alloc.node_id) ?? 0) + alloc.gpu_indices.length);
  }
  return out;
}

export interface SummaryCard {
  label: string;
  value: string;
}

export function summaryCards(summary: ClusterSummaryWire): SummaryCard[] {
  const nodesUp = (summary.nodes["active"] ?? 0) + (summary.nodes["draining"] ?? 0);
  const nodesTotal = Object.values(summary.nodes).reduce((a, b) => a + b, 0);
  const running = summary.jobs["running"] ?? 0;
  const waiting = (summary.jobs["pending"] ?? 0) + (summary.jobs["scheduled"] ?? 0);
  const pct =
    summary.total_gpus > 0
      ? ((100 * summary.busy_gpus) / summary.total_gpus).toFixed(0)
      : "0";
  return [
    { label: "nodes up", value: `${nodesUp}/${nodesTotal}` },
    { label: "jobs running", value: `${running}` },
    { label: "jobs waiting", value: `${waiting}` },
    { label: "gpus busy", value: `${summary.busy_gpus}/${summary.total_gpus} (${pct}%)` },
  ];
}

export type PresetName = "notebook" | "batch";

/** Complete, submittable job spec for the two dev-cluster presets. */
export function jobPreset(name: PresetName, overrides?: Partial<JobSpecWire>): JobSpecWire {
  const notebook = name === "notebook";
  const spec: JobSpecWire = {
    image_ref: notebook ? "gpunion-dev/notebook:latest" : "gpunion-dev/batch:latest",
    image_digest: notebook ? DEV_NOTEBOOK_DIGEST : DEV_BATCH_DIGEST,
    mode: { kind: notebook ? "interactive" : "batch" },
    entrypoint: notebook ? ["jupyter", "lab"] : ["python", "train.py"],
    gpu_memory_mib_required: 16_000,
    min_compute_capability: [7, 0],
    priority: notebook ? 10 : 5,
    checkpoint_interval_s: notebook ? 300 : 600,
    checkpoint_mode: { kind: "incremental" },
    storage_target: { kind: "shared_fs", path: "/campus/checkpoints" },
    estimated_duration_s: notebook ? 14_400 : 28_800,
    affinity_window_s: 1_800,
  };
  return { ...spec, ...overrides };
}

/** Validate a user-edited spec before submission; returns problems, [] if ok. */
export function validateSpec(spec: JobSpecWire): string[] {
  const problems: string[] = [];
  if (!spec.image_ref) problems.push("image_ref is required");
  if (!/^[0-9a-f]{64}$/.test(spec.image_digest)) {
    problems.push("image_digest must be 64 hex chars");
  }
  if (spec.gpu_memory_mib_required <= 0) problems.push("gpu_memory_mib_required must be > 0");
  if (spec.checkpoint_interval_s <= 0) problems.push("checkpoint_interval_s must be > 0");
  if (spec.estimated_duration_s <= 0) problems.push("estimated_duration_s must be > 0");
  if (!["interactive", "batch"].includes(spec.mode.kind)) {
    problems.push(`unknown mode "${spec.mode.kind}"`);
  }
  if (!["full", "incremental"].includes(spec.checkpoint_mode.kind)) {
    problems.push(`unknown checkpoint_mode "${spec.checkpoint_mode.kind}"`);
  }
  return problems;
}
