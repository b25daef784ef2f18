import { describe, expect, it } from "vitest";

import {
  formatClock,
  mergeTimeline,
  nextSinceSeq,
  toTimelineItems,
} from "../src/timeline.js";
import type { EventWire } from "../src/types.js";

function event(seq: number, kind: string, extra: Record<string, unknown> = {}): EventWire {
  return { seq, at: seq * 1000, payload: { kind, ...extra } };
}

describe("formatClock", () => {
  it("renders simulated milliseconds as hh:mm:ss", () => {
    expect(formatClock(0)).toBe("00:00:00");
    expect(formatClock(61_000)).toBe("00:01:01");
    expect(formatClock(3_600_000 + 125_000)).toBe("01:02:05");
  });
});

describe("toTimelineItems", () => {
  it("describes the common event kinds in plain words", () => {
    const nid = "d".repeat(32);
    const items = toTimelineItems([
      event(0, "node_registered", { node_id: nid, gpus: [{}, {}], rejoined: false }),
      event(1, "job_enqueued", { job_id: "job-000001" }),
      event(2, "allocation_granted", {
        allocation: { job_id: "job-000001", node_id: nid, gpu_indices: [0, 1] },
      }),
      event(3, "node_state_changed", { node_id: nid, state: "unavailable", reason: "missed 3" }),
      event(4, "migration_completed", { job_id: "job-000001", to_node: nid }),
      event(5, "directive_queued", { node_id: nid, directive: { kind: "kill", grace_s: 0 } }),
    ]);
    expect(items.map((i) => i.text)).toEqual([
      "node dddddddd… registered with 2 gpu(s)",
      "job job-000001 enqueued",
      "job job-000001 allocated gpu[0,1] on dddddddd…",
      "node dddddddd… → unavailable (missed 3)",
      "job job-000001 migrated to dddddddd…",
      'directive "kill" queued for dddddddd…',
    ]);
  });

  it("hides heartbeat chatter unless verbose", () => {
    const events = [
      event(0, "heartbeat_accepted", { node_id: "x".repeat(32) }),
      event(1, "job_enqueued", { job_id: "j" }),
    ];
    expect(toTimelineItems(events).map((i) => i.seq)).toEqual([1]);
    expect(toTimelineItems(events, true).map((i) => i.seq)).toEqual([0, 1]);
  });

  it("falls back to the raw kind for unknown events", () => {
    expect(toTimelineItems([event(0, "something_new")])[0].text).toBe("something_new");
  });
});

describe("mergeTimeline", () => {
  it("dedupes by seq and sorts newest first", () => {
    const a = toTimelineItems([event(1, "job_enqueued", { job_id: "j1" })]);
    const b = toTimelineItems([
      event(1, "job_enqueued", { job_id: "j1" }),
      event(2, "job_cancelled", { job_id: "j1" }),
    ]);
    const merged = mergeTimeline(a, b);
    expect(merged.map((i) => i.seq)).toEqual([2, 1]);
  });

  it("caps the feed at the newest N items", () => {
    const items = toTimelineItems(
      Array.from({ length: 30 }, (_, i) => event(i, "job_enqueued", { job_id: `j${i}` })),
    );
    const merged = mergeTimeline([], items, 10);
    expect(merged).toHaveLength(10);
    expect(merged[0].seq).toBe(29);
    expect(merged[9].seq).toBe(20);
  });
});

describe("nextSinceSeq", () => {
  it("advances past the newest seq seen, even for filtered kinds", () => {
    const events = [
      event(4, "heartbeat_accepted", { node_id: "x".repeat(32) }),
      event(5, "job_enqueued", { job_id: "j" }),
    ];
    expect(nextSinceSeq(events, 0)).toBe(6);
    expect(nextSinceSeq([], 6)).toBe(6);
  });
});
