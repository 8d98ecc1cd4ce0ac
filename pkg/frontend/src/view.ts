// Rendering. The format* helpers are pure (and unit-tested); render()
// applies a ConsoleState snapshot to the DOM and is only exercised in
// the browser.

import type { ConsoleState } from "./store.js";
import type { Envelope, StatusDoc } from "./types.js";

export function formatRunning(status: StatusDoc): string {
  const r = status.running;
  if (r === null) return "idle";
  const uptime = status.tick - r.started_tick;
  return `${r.task_name} v${r.version} (priority ${r.priority}) in ${r.fsm_state}, up ${uptime} ticks`;
}

export function decisionClass(kind: string | null): string {
  switch (kind) {
    case "Accepted":
      return "accepted";
    case "PreemptedAndAccepted":
      return "preempted";
    case "Rejected":
      return "rejected";
    default:
      return "none";
  }
}

export function formatFeedRow(env: Envelope): string {
  return `#${env.id} t${env.ts} ${env.src} -> ${env.dst} ${env.kind}`;
}

export function connectionLabel(state: ConsoleState): string {
  switch (state.connection) {
    case "open":
      return "live";
    case "retrying":
      return "reconnecting...";
    case "stopped":
      return "stopped";
    default:
      return "connecting";
  }
}

interface Elements {
  banner: HTMLElement;
  toast: HTMLElement;
  connection: HTMLElement;
  running: HTMLElement;
  tick: HTMLElement;
  phase: HTMLElement;
  decisionHead: HTMLElement;
  decisionBytes: HTMLElement;
  feed: HTMLElement;
  tasks: HTMLElement;
  history: HTMLElement;
}

export function grabElements(doc: Document): Elements {
  const get = (id: string): HTMLElement => {
    const el = doc.getElementById(id);
    if (!el) throw new Error(`missing element #${id}`);
    return el;
  };
  return {
    banner: get("banner"),
    toast: get("toast"),
    connection: get("connection"),
    running: get("running"),
    tick: get("tick"),
    phase: get("phase"),
    decisionHead: get("decision-head"),
    decisionBytes: get("decision-bytes"),
    feed: get("feed"),
    tasks: get("tasks"),
    history: get("history"),
  };
}

export function render(state: ConsoleState, els: Elements): void {
  const banner = state.statusError
    ? `service unreachable: ${state.statusError}`
    : state.connection === "retrying"
      ? "event stream lost, reconnecting"
      : null;
  els.banner.textContent = banner ?? "";
  els.banner.hidden = banner === null;

  els.toast.textContent = state.toast ?? "";
  els.toast.hidden = state.toast === null;

  els.connection.textContent = connectionLabel(state);
  els.connection.className = `conn ${state.connection}`;

  if (state.status) {
    els.tick.textContent = String(state.status.tick);
    els.phase.textContent = state.status.phase;
    els.running.textContent = formatRunning(state.status);
    els.running.className = state.status.running ? "running active" : "running";
    renderTasks(state.status, els.tasks);
    renderHistory(state.status, els.history);
  }

  if (state.decision) {
    const d = state.decision;
    const text = d.human_text ? ` "${d.human_text}"` : "";
    els.decisionHead.textContent = `request ${d.request_id}: ${d.kind}${text}`;
    els.decisionHead.className = `decision ${decisionClass(d.kind)}`;
    els.decisionBytes.textContent = state.decisionText ?? "";
  } else if (state.lastRequestId !== null) {
    els.decisionHead.textContent = `request ${state.lastRequestId}: pending`;
    els.decisionHead.className = "decision none";
    els.decisionBytes.textContent = "";
  }

  renderFeed(state, els.feed);
}

function renderTasks(status: StatusDoc, root: HTMLElement): void {
  root.replaceChildren();
  const doc = root.ownerDocument;
  for (const [name, version, priority] of status.tasks) {
    const opt = doc.createElement("option");
    opt.value = name;
    opt.label = `${name} v${version} (priority ${priority})`;
    root.appendChild(opt);
  }
}

function renderHistory(status: StatusDoc, root: HTMLElement): void {
  root.replaceChildren();
  const doc = root.ownerDocument;
  for (const h of [...status.history].reverse()) {
    const li = doc.createElement("li");
    li.textContent = `t${h.tick} ${h.task_name} ${h.outcome} (request ${h.request_id})`;
    li.className = h.outcome;
    root.appendChild(li);
  }
}

function renderFeed(state: ConsoleState, root: HTMLElement): void {
  root.replaceChildren();
  const doc = root.ownerDocument;
  // newest at the top, feed itself stays in id order
  for (let i = state.feed.length - 1; i >= 0; i -= 1) {
    const env = state.feed[i];
    if (env === undefined) continue;
    const li = doc.createElement("li");
    li.textContent = formatFeedRow(env);
    root.appendChild(li);
  }
}
