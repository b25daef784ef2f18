/** Wire types mirrored from the coordinator REST API. Enums arrive as
 * tagged objects: `{"kind": "<value>"}`. */

export interface Tagged {
  kind: string;
}

export interface GpuWire {
  index: number;
  model: string;
  memory_mib: number;
  compute_capability: [number, number];
}

export interface NodeWire {
  id: string;
  gpus: GpuWire[];
  state: Tagged;
  latency_ms: number;
  volatility_score: number;
  last_heartbeat_seq: number;
  missed_heartbeats: number;
  auth_token_hash: string;
  /** only present on GET /v1/nodes/{id}: gpu index -> job id */
  busy?: Record<string, string>;
}

export interface StorageTargetWire {
  kind: string;
  path?: string;
  url?: string;
}

export interface JobSpecWire {
  image_ref: string;
  image_digest: string;
  mode: Tagged;
  entrypoint: string[];
  gpu_memory_mib_required: number;
  min_compute_capability: [number, number];
  priority: number;
  checkpoint_interval_s: number;
  checkpoint_mode: Tagged;
  storage_target: StorageTargetWire;
  estimated_duration_s: number;
  affinity_window_s: number;
}

export interface AllocationWire {
  job_id: string;
  node_id: string;
  gpu_indices: number[];
  granted_at: number;
}

export interface JobWire {
  job_id: string;
  spec: JobSpecWire;
  state: Tagged;
  enqueue_seq: number;
  allocations: AllocationWire[];
  affinity_node: string | null;
  affinity_expires_at: number | null;
}

export interface ClusterSummaryWire {
  nodes: Record<string, number>;
  jobs: Record<string, number>;
  total_gpus: number;
  busy_gpus: number;
}

export interface EventWire {
  seq: number;
  at: number;
  payload: { kind: string; [key: string]: unknown };
}

export interface ManifestWire {
  job_id: string;
  seq: number;
  parent_seq: number | null;
  created_at: number;
  payload_bytes: number;
  content_hash: string;
  target: StorageTargetWire;
}

export interface ApiError {
  status: number;
  code: string;
  message: string;
}
