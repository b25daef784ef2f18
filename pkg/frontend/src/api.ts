/** Thin typed client over the coordinator REST API.
 *
 * The fetch implementation is injectable so the client is testable without
 * a browser or a live coordinator.
 */

import type {
  ApiError,
  ClusterSummaryWire,
  EventWire,
  JobSpecWire,
  JobWire,
  ManifestWire,
  NodeWire,
} from "./types.js";

export type FetchLike = (
  url: string,
  init?: { method?: string; headers?: Record<string, string>; body?: string },
) => Promise<{ ok: boolean; status: number; json(): Promise<unknown> }>;

export class CoordinatorError extends Error implements ApiError {
  constructor(
    public status: number,
    public code: string,
    message: string,
  ) {
    super(message);
    this.name = "CoordinatorError";
  }
}

async function toError(status: number, body: unknown): Promise<CoordinatorError> {
  const detail = (body as { detail?: { error?: string; message?: string } })?.detail;
  return new CoordinatorError(
    status,
    detail?.error ?? `http_${status}`,
    detail?.message ?? `request failed with status ${status}`,
  );
}

export class CoordinatorClient {
  constructor(
    private readonly base: string = "",
    private readonly fetchImpl: FetchLike = (...args) =>
      (globalThis.fetch as unknown as FetchLike)(...args),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: Parameters<FetchLike>[1] = { method };
    if (body !== undefined) {
      init.headers = { "Content-Type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const resp = await this.fetchImpl(this.base + path, init);
    let parsed: unknown = null;
    try {
      parsed = await resp.json();
    } catch {
      parsed = null;
    }
    if (!resp.ok) {
      throw await toError(resp.status, parsed);
    }
    return parsed as T;
  }

  listNodes(): Promise<NodeWire[]> {
    return this.request("GET", "/v1/nodes");
  }

  getNode(nodeId: string): Promise<NodeWire> {
    return this.request("GET", `/v1/nodes/${encodeURIComponent(nodeId)}`);
  }

  listJobs(): Promise<JobWire[]> {
    return this.request("GET", "/v1/jobs");
  }

  getJob(jobId: string): Promise<JobWire> {
    return this.request("GET", `/v1/jobs/${encodeURIComponent(jobId)}`);
  }

  jobCheckpoints(jobId: string): Promise<{ tail: ManifestWire | null }> {
    return this.request("GET", `/v1/jobs/${encodeURIComponent(jobId)}/checkpoints`);
  }

  summary(): Promise<ClusterSummaryWire> {
    return this.request("GET", "/v1/cluster/summary");
  }

  events(sinceSeq = 0, limit = 200): Promise<EventWire[]> {
    return this.request("GET", `/v1/events?since_seq=${sinceSeq}&limit=${limit}`);
  }

  submitJob(spec: JobSpecWire): Promise<{ job_id: string }> {
    return this.request("POST", "/v1/jobs", spec);
  }

  cancelJob(jobId: string): Promise<{ cancelled: boolean }> {
    return this.request("DELETE", `/v1/jobs/${encodeURIComponent(jobId)}`);
  }

  pauseNode(nodeId: string): Promise<{ ok: boolean }> {
    return this.request("POST", `/v1/nodes/${encodeURIComponent(nodeId)}/pause`);
  }

  resumeNode(nodeId: string): Promise<{ ok: boolean }> {
    return this.request("POST", `/v1/nodes/${encodeURIComponent(nodeId)}/resume`);
  }

  drainNode(nodeId: string, graceS?: number): Promise<{ ok: boolean }> {
    const q = graceS === undefined ? "" : `?grace_s=${graceS}`;
    return this.request("POST", `/v1/nodes/${encodeURIComponent(nodeId)}/drain${q}`);
  }

  killNode(nodeId: string, grace = 0): Promise<{ queued: boolean }> {
    return this.request("POST", `/v1/nodes/${encodeURIComponent(nodeId)}/kill?grace=${grace}`);
  }
}
