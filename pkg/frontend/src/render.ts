/** DOM rendering. Takes view-model rows from state.ts/timeline.ts and an
 * action callback table; the poll loop in main.ts owns all data flow. */

import type { JobRow, NodeRow, SummaryCard } from "./state.js";
import type { TimelineItem } from "./timeline.js";

export interface NodeActions {
  pause(id: string): void;
  resume(id: string): void;
  drain(id: string): void;
  kill(id: string): void;
}

export interface JobActions {
  cancel(id: string): void;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function actionButton(label: string, cls: string, onClick: () => void): HTMLButtonElement {
  const btn = el("button", `action ${cls}`, label);
  btn.addEventListener("click", onClick);
  return btn;
}

export function renderSummary(root: HTMLElement, cards: SummaryCard[]): void {
  root.replaceChildren(
    ...cards.map((card) => {
      const box = el("div", "card");
      box.append(el("div", "card-value", card.value), el("div", "card-label", card.label));
      return box;
    }),
  );
}

export function renderNodes(root: HTMLElement, rows: NodeRow[], actions: NodeActions): void {
  const table = el("table");
  const head = el("tr");
  for (const h of ["node", "state", "gpus", "latency", "volatility", "missed", ""]) {
    head.append(el("th", undefined, h));
  }
  table.append(head);
  for (const row of rows) {
    const tr = el("tr");
    const idCell = el("td", "mono", row.short);
    idCell.title = row.id;
    tr.append(
      idCell,
      el("td", `state state-${row.state}`, row.state),
      el("td", undefined, `${row.busyGpus}/${row.gpuCount} busy`),
      el("td", undefined, `${row.latencyMs.toFixed(1)} ms`),
      el("td", undefined, row.volatility),
      el("td", undefined, String(row.missed)),
    );
    const cell = el("td", "actions");
    if (row.canPause) cell.append(actionButton("pause", "neutral", () => actions.pause(row.id)));
    if (row.canResume) cell.append(actionButton("resume", "neutral", () => actions.resume(row.id)));
    if (row.canDrain) {
      cell.append(
        actionButton("drain", "warn", () => {
          if (confirm(`Drain node ${row.short}? Workloads checkpoint, then the node departs.`)) {
            actions.drain(row.id);
          }
        }),
      );
    }
    if (row.canKill) {
      cell.append(
        actionButton("kill", "danger", () => {
          if (confirm(`Kill node ${row.short} immediately? Unsaved work since the last checkpoint is lost.`)) {
            actions.kill(row.id);
          }
        }),
      );
    }
    tr.append(cell);
    table.append(tr);
  }
  root.replaceChildren(table);
  if (rows.length === 0) root.replaceChildren(el("p", "empty", "no nodes registered"));
}

export function renderJobs(root: HTMLElement, rows: JobRow[], actions: JobActions): void {
  const table = el("table");
  const head = el("tr");
  for (const h of ["job", "state", "image", "mode", "prio", "node", "gpus", "affinity", ""]) {
    head.append(el("th", undefined, h));
  }
  table.append(head);
  for (const row of rows) {
    const tr = el("tr");
    tr.append(
      el("td", "mono", row.id),
      el("td", `state state-${row.state}`, row.state),
      el("td", undefined, row.image),
      el("td", undefined, row.mode),
      el("td", undefined, String(row.priority)),
      el("td", "mono", row.placement),
      el("td", undefined, row.gpuIndices),
      el("td", "mono", row.affinity),
    );
    const cell = el("td", "actions");
    if (row.canCancel) {
      cell.append(actionButton("cancel", "danger", () => actions.cancel(row.id)));
    }
    tr.append(cell);
    table.append(tr);
  }
  root.replaceChildren(table);
  if (rows.length === 0) root.replaceChildren(el("p", "empty", "no jobs submitted"));
}

export function renderTimeline(root: HTMLElement, items: TimelineItem[]): void {
  const list = el("ul", "timeline");
  for (const item of items) {
    const li = el("li");
    li.append(el("span", "mono clock", item.clock), el("span", undefined, item.text));
    list.append(li);
  }
  root.replaceChildren(items.length ? list : el("p", "empty", "no events yet"));
}

export function renderStatus(root: HTMLElement, text: string, isError: boolean): void {
  root.textContent = text;
  root.className = isError ? "status error" : "status";
}
