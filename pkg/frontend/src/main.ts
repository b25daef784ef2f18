/** Dashboard entry point: a 2-second polling loop against the coordinator
 * REST API plus form handlers for job submission. */

import { CoordinatorClient, CoordinatorError } from "./api.js";
import {
  busyByNode,
  jobPreset,
  jobRow,
  nodeRow,
  summaryCards,
  validateSpec,
  type PresetName,
} from "./state.js";
import { mergeTimeline, nextSinceSeq, toTimelineItems, type TimelineItem } from "./timeline.js";
import {
  renderJobs,
  renderNodes,
  renderStatus,
  renderSummary,
  renderTimeline,
} from "./render.js";
import type { JobSpecWire } from "./types.js";

const POLL_INTERVAL_MS = 2000;

function must(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id} in index.html`);
  return node;
}

function start(): void {
  // the bundle is served by the coordinator itself at /ui, so the API
  // lives at the same origin
  const client = new CoordinatorClient("");
  const summaryRoot = must("summary");
  const nodesRoot = must("nodes");
  const jobsRoot = must("jobs");
  const timelineRoot = must("timeline");
  const statusRoot = must("status");
  const specBox = must("spec-box") as HTMLTextAreaElement;

  let timeline: TimelineItem[] = [];
  let sinceSeq = 0;
  let verbose = false;

  const report = (err: unknown) => {
    const msg =
      err instanceof CoordinatorError
        ? `${err.code}: ${err.message}`
        : `coordinator unreachable: ${String(err)}`;
    renderStatus(statusRoot, msg, true);
  };

  const act = (fn: () => Promise<unknown>) => {
    fn()
      .then(() => poll())
      .catch(report);
  };

  const nodeActions = {
    pause: (id: string) => act(() => client.pauseNode(id)),
    resume: (id: string) => act(() => client.resumeNode(id)),
    drain: (id: string) => act(() => client.drainNode(id)),
    kill: (id: string) => act(() => client.killNode(id, 0)),
  };
  const jobActions = {
    cancel: (id: string) => act(() => client.cancelJob(id)),
  };

  async function poll(): Promise<void> {
    try {
      const [nodes, jobs, summary, events] = await Promise.all([
        client.listNodes(),
        client.listJobs(),
        client.summary(),
        client.events(sinceSeq),
      ]);
      const busy = busyByNode(jobs);
      renderSummary(summaryRoot, summaryCards(summary));
      renderNodes(nodesRoot, nodes.map((n) => nodeRow(n, busy)), nodeActions);
      renderJobs(jobsRoot, jobs.map(jobRow), jobActions);
      sinceSeq = nextSinceSeq(events, sinceSeq);
      timeline = mergeTimeline(timeline, toTimelineItems(events, verbose));
      renderTimeline(timelineRoot, timeline);
      renderStatus(statusRoot, `connected · ${new Date().toLocaleTimeString()}`, false);
    } catch (err) {
      report(err);
    }
  }

  const loadPreset = (name: PresetName) => {
    specBox.value = JSON.stringify(jobPreset(name), null, 2);
  };
  must("preset-notebook").addEventListener("click", () => loadPreset("notebook"));
  must("preset-batch").addEventListener("click", () => loadPreset("batch"));

  must("submit-job").addEventListener("click", () => {
    let spec: JobSpecWire;
    try {
      spec = JSON.parse(specBox.value) as JobSpecWire;
    } catch (err) {
      renderStatus(statusRoot, `spec is not valid JSON: ${String(err)}`, true);
      return;
    }
    const problems = validateSpec(spec);
    if (problems.length) {
      renderStatus(statusRoot, `spec rejected: ${problems.join("; ")}`, true);
      return;
    }
    client
      .submitJob(spec)
      .then((out) => {
        renderStatus(statusRoot, `submitted ${out.job_id}`, false);
        return poll();
      })
      .catch(report);
  });

  const verboseToggle = must("verbose-toggle") as HTMLInputElement;
  verboseToggle.addEventListener("change", () => {
    verbose = verboseToggle.checked;
    timeline = [];
    sinceSeq = 0;
    void poll();
  });

  loadPreset("notebook");
  void poll();
  setInterval(() => void poll(), POLL_INTERVAL_MS);
}

document.addEventListener("DOMContentLoaded", start);
